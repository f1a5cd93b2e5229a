#pragma once

#include <string>
#include <utility>

#include "wishart/rng.hpp"
#include "wishart/types.hpp"

namespace wishart {

// Stationary-regime quantities of a canonical ergodic process (-(b+b^T) > 0):
//   R_inf = E[X_inf], Q_inf = 1/E[tr(X_inf^{-1})],
//   checkL_inf = matrix of Y -> E[barL_{X_inf}(Y)] in the row-major e_ij basis,
//   hatL_inf = checkL_inf - Q_inf vec(I) vec(I)^T.
// Symmetric b gives R_inf and Q_inf in closed form; the operator matrices and the
// general-b Q_inf are Monte Carlo averages over stationary draws.
struct ErgodicMoments {
  int d = 0;
  double alpha = 0.0;
  Mat b;
  bool symmetric_b = false;
  Mat R_inf;
  double Q_inf = 0.0;
  Mat checkL_inf;  // empty unless sampled
  Mat hatL_inf;    // empty unless sampled
  int mc_samples = 0;
  double mc_se = 0.0;  // largest entrywise standard error of checkL_inf

  bool has_operators() const { return checkL_inf.size() > 0; }
};

ErgodicMoments ergodic_moments(double alpha, const Mat& b, int mc_samples = 0,
                               RngStream* rng = nullptr);

// E[exp(tr(c G))] = exp(2 tr(c^2 C)) for the symmetric Gaussian G with covariance
// tensor delta_ik C_jl + delta_il C_jk + delta_jk C_il + delta_jl C_ik.
double matrix_gaussian_laplace(const Mat& c, const Mat& C);

// Joint limit of (sqrt(T)(b_hat - b), sqrt(T)(alpha_hat - alpha)), symmetric drift:
// exp( 2Q l^2/D - (2Q l/D) tr(c Rinv) + tr(c L^{-1}_{R,Q}(c)) ), D = 1 - Q tr(Rinv).
double limit_laplace_joint_sym(const Mat& c, double lambda, const ErgodicMoments& m);

// Same pair for general drift, through the sampled operator matrices.
double limit_laplace_joint_gen(const Mat& c, double lambda, const ErgodicMoments& m);

// Limit of sqrt(T)(b_hat - b) with alpha known:
// exp(tr(c L^{-1}_{R_inf}(c))) for symmetric drift, exp(vec(c)^T checkL^{-1} vec(c)/2) else.
double limit_laplace_b(const Mat& c, const ErgodicMoments& m, bool general);

enum class LimitCase {
  JointErgodic,          // sqrt(T) rates, b symmetric, alpha > d+1
  JointErgodicCritical,  // alpha = d+1: alpha error at rate T, hitting-time limit
  JointErgodicGeneral,   // sqrt(T) rates, general b, alpha > d+1
  BErgodic,              // sqrt(T)(b_hat - b), b symmetric
  BErgodicGeneral,       // sqrt(T)(b_hat - b), general b
  JointZeroDrift,          // b = 0: (T b_hat, sqrt(log T)(alpha_hat - alpha))
  JointZeroDriftCritical,  // b = 0, alpha = d+1: (T b_hat, log T (alpha_hat - alpha))
  BZeroDrift,              // b = 0, alpha known: T(b_hat - b)
  BExpanding,              // b = b0 I, b0 > 0: e^{b0 T}(b_hat - b)
  BDiagonal,               // diagonal b, per-entry rates
};

std::string limit_case_name(LimitCase c);
LimitCase limit_case_from_name(const std::string& name);

// Throws CaseParameterMismatch unless the spec parameters (a = I, drift shape,
// degree regime) fit the requested case.
void check_case_parameters(LimitCase kind, const WishartSpec& spec);

// A limit law of scaled estimation errors: a matrix part and, for the joint
// cases, a scalar part. Closed-form Laplace transforms where available,
// otherwise Monte Carlo with a standard error.
struct LimitLaw {
  LimitCase kind;
  int d = 0;
  double alpha = 0.0;
  Mat b;
  Mat x;  // starting point, used by the expanding and diagonal cases
  ErgodicMoments moments;
  int n_inner = 128;   // time steps of the unit-horizon bridge in the zero-drift cases
  Mat joint_cov_sqrt;  // general joint case: root of the (d^2+1) Gaussian covariance
  Mat gen_b_cov_sqrt;  // general b-only case: root of checkL^{-1}

  bool has_scalar() const;
  bool closed_form() const;

  // One draw (matrix part, scalar part); the scalar is NaN when absent.
  std::pair<Mat, double> sample(RngStream& rng) const;

  struct Value {
    double value = 0.0;
    double se = 0.0;
  };
  // E[exp(<c, G>_F + lambda H)]. Monte Carlo cases need rng and n_samples.
  Value laplace(const Mat& c, double lambda, RngStream* rng = nullptr, int n_samples = 0) const;
};

// Validates that the spec parameters fit the requested case; ergodic cases take
// precomputed moments (matching the spec), the general ones need the sampled
// operator matrices.
LimitLaw limit_law(LimitCase kind, const WishartSpec& spec,
                   const ErgodicMoments* moments = nullptr, int n_inner = 128);

}  // namespace wishart
