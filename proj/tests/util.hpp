#pragma once

#include <wishart/rng.hpp>
#include <wishart/types.hpp>

namespace wishart::testutil {

// Symmetric matrix with entries of typical size `scale`.
inline Mat random_sym(int d, double scale, RngStream& rng) {
  Mat m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = scale * rng.normal();
  return m;
}

// Positive definite matrix G G^T + ridge I.
inline Mat random_spd(int d, double ridge, RngStream& rng) {
  Mat g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  return g * g.transpose() / d + ridge * Mat::Identity(d, d);
}

inline Mat random_mat(int d, double scale, RngStream& rng) {
  Mat m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = scale * rng.normal();
  return m;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace wishart::testutil
