#ifndef IST_ORACLE_HPP_
#define IST_ORACLE_HPP_

#include <set>
#include <span>
#include <vector>

#include "ist/batch.hpp"

namespace ist {

// Sequential sorted-set ground truth for differential tests. Replays raw
// operations strictly in input order with the same boolean semantics as the
// tree (insert -> newly inserted, erase -> was live, contains -> membership).
template <class K>
class oracle {
 public:
  bool insert(const K& key) { return state_.insert(key).second; }
  bool erase(const K& key) { return state_.erase(key) > 0; }
  bool contains(const K& key) const { return state_.count(key) > 0; }

  batch_result apply(std::span<const raw_op<K>> raw) {
    batch_result out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      switch (raw[i].kind) {
        case op_kind::insert:
          out[i] = insert(raw[i].key);
          break;
        case op_kind::erase:
          out[i] = erase(raw[i].key);
          break;
        case op_kind::contains:
          out[i] = contains(raw[i].key);
          break;
      }
    }
    return out;
  }

  batch_result apply(const std::vector<raw_op<K>>& raw) {
    return apply(std::span<const raw_op<K>>(raw));
  }

  std::vector<K> sorted_contents() const {
    return {state_.begin(), state_.end()};
  }
  std::size_t size() const { return state_.size(); }

 private:
  std::set<K> state_;
};

}  // namespace ist

#endif  // IST_ORACLE_HPP_
