#pragma once

#include <cmath>
#include <span>

namespace dcdcsr {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

inline double norm2(std::span<const double> a) {
  return std::sqrt(dot(a, a));
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

}  // namespace dcdcsr
