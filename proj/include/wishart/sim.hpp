#pragma once

#include <utility>
#include <vector>

#include "wishart/rng.hpp"
#include "wishart/types.hpp"

namespace wishart {

struct SamplePath {
  WishartSpec spec;
  Vec times;                // t_i = i T / N, i = 0..N
  std::vector<Mat> states;  // states[0] == spec.x
  int euler_fallbacks = 0;

  int steps() const { return static_cast<int>(states.size()) - 1; }
  double horizon() const { return times.size() ? times(times.size() - 1) : 0.0; }
};

// One-step exact transition law of a canonical spec at fixed dt, with the
// b-dependent pieces (e^{b dt}, q = int_0^dt e^{2bs} ds) factorized once.
class TransitionKernel {
 public:
  TransitionKernel(const WishartSpec& spec, double dt);
  // Noncentral Wishart draw: q^{1/2} [ (G+M)(G+M)^T + CentralWishart(alpha - p) ] q^{1/2}
  // where M M^T = q^{-1/2} e^{b dt} x0 e^{b dt} q^{-1/2} has rank p.
  // Throws RankConditionViolated when alpha < d - 1 + p.
  Mat sample(const Mat& x0, RngStream& rng) const;
  double dt() const { return dt_; }

 private:
  int d_;
  double alpha_, dt_;
  Mat ebt_, q_sqrt_, q_inv_sqrt_;
};

// Central Wishart with identity scale and real degree >= d-1 (Bartlett construction).
Mat bartlett_wishart(double degree, int d, RngStream& rng);

Mat transition_sample(const WishartSpec& spec, const Mat& x0, double dt, RngStream& rng);

// Euler-Maruyama step with symmetrization and eigenvalue clipping at 0.
Mat euler_step(const WishartSpec& spec, const Mat& x0, double dt, RngStream& rng);

// Exact sampling on the uniform grid t_i = i T / N; canonical specs directly,
// transformable specs through Y = (a^T)^{-1} X a^{-1}. Falls back to euler_step
// for steps violating the exact sampler's rank condition (counted).
SamplePath path_sample(const WishartSpec& spec, double T, int N, RngStream& rng);

// Draw from the stationary law of an ergodic spec (b + b^T negative definite).
Mat stationary_sample(double alpha, const Mat& b, RngStream& rng);

// (X_1, R_1) of the Wishart process started at 0 with b = 0, a = I;
// exact transitions on n_inner substeps, trapezoidal R accumulation.
std::pair<Mat, Mat> wishart0_joint_sample(double alpha, int d, int n_inner, RngStream& rng);

// First hitting time of level a > 0 by a standard Brownian motion: a^2 / Z^2.
double tau_sample(double a, RngStream& rng);

// d x d matrix of independent standard normals.
Mat matrix_gaussian_iid(int d, RngStream& rng);

// Symmetric Gaussian with covariance tensor
// C[i,j,k,l] = d_ik C_jl + d_il C_jk + d_jk C_il + d_jl C_ik, sampled as
// sqrt(C) G + G^T sqrt(C).
Mat matrix_gaussian_cov(const Mat& C, RngStream& rng);

}  // namespace wishart
