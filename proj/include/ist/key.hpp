#ifndef IST_KEY_HPP_
#define IST_KEY_HPP_

#include <cstdint>

namespace ist {

// Interpolation coordinate of a key on the real line. coord must be monotone
// in key order. It is only used to pick first-guess slots and bucket
// thresholds; every final placement decision is an exact key comparison, so
// coordinate rounding can cost probes but never correctness.
template <class K>
struct key_traits;

template <>
struct key_traits<std::int64_t> {
  static double coord(std::int64_t v) { return static_cast<double>(v); }
};

template <>
struct key_traits<std::int32_t> {
  static double coord(std::int32_t v) { return static_cast<double>(v); }
};

template <>
struct key_traits<double> {
  // Keys must be finite; NaN has no place on the interpolation line.
  static double coord(double v) { return v; }
};

}  // namespace ist

#endif  // IST_KEY_HPP_
