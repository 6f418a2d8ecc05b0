#ifndef STGIB_INIT_H_
#define STGIB_INIT_H_

#include <cmath>
#include <random>

#include "stgib/types.h"

namespace stgib {

// Uniform(-b, b) with b = gain * sqrt(6 / (fan_in + fan_out)).
inline Matrix GlorotUniform(int rows, int cols, int fan_in, int fan_out, std::mt19937_64& rng, double gain = 1.0) {
  const double bound = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

inline Matrix NormalInit(int rows, int cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace stgib

#endif  // STGIB_INIT_H_
