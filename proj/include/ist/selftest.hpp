#ifndef IST_SELFTEST_HPP_
#define IST_SELFTEST_HPP_

#include <string>
#include <vector>

namespace ist::selftest {

enum class scale { small, full };

struct result {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Runs the oracle-equivalence and invariant property suites. small finishes
// in well under a minute; full runs the million-key variants. When
// inject_corruption is set, a tree is deliberately damaged through a debug
// hook before its invariant sweep, which must make the suite fail.
std::vector<result> run_suite(scale sc, bool inject_corruption = false);

}  // namespace ist::selftest

#endif  // IST_SELFTEST_HPP_
