#pragma once

#include <optional>
#include <string>
#include <utility>

#include "wishart/pathstats.hpp"
#include "wishart/types.hpp"

namespace wishart {

enum class EstimatorVariant { JointSym, JointGen, BSym, BGen, BDiag, Pipeline };

std::string variant_name(EstimatorVariant v);
EstimatorVariant variant_from_name(const std::string& name);

struct Estimate {
  EstimatorVariant variant;
  Mat b_hat;
  bool has_alpha = false;
  double alpha_hat = 0.0;
  bool has_a = false;
  Mat a_hat;
  double residual = 0.0;  // relative first-order-condition residual
  double cond = 0.0;      // condition number of the solved linear system, when applicable
  bool ata_projected = false;
};

// Joint closed form (alpha >= d+1 regime, b symmetric):
//   b_hat = L^{-1}_{R_T, T^2 Q_T}(X_T - x - T (Q_T Z_T + 1 + d) I)
//   alpha_hat = 1 + d + Q_T (Z_T - 2 T tr(b_hat))
Estimate mle_joint_sym(const PathStats& stats);

// Joint estimator for general b: (d^2+1)-dimensional linear system
//   op_int vec(b) + (alpha T/2) vec(I) = vec(ito_linv)
//   Z_T/4 - (alpha-1-d) Qinv_T/4 - T tr(b)/2 = 0
Estimate mle_joint_gen(const PathStats& stats);

// b_hat = L^{-1}_{R_T}(X_T - x - alpha T I), alpha known, b symmetric.
Estimate mle_b_sym(const PathStats& stats, double alpha);

// General-b estimator with alpha known: op_int vec(b) = vec(ito_linv - (alpha T/2) I).
Estimate mle_b_gen(const PathStats& stats, double alpha);

// Diagonal-b estimator: b_i = ((X_T)_ii - x_ii - alpha T) / (2 (R_T)_ii).
Estimate mle_b_diag(const PathStats& stats, double alpha);

// Log likelihood ratio against the reference (b = 0, alpha0), b symmetric.
double loglik_sym(const PathStats& stats, const Mat& b, double alpha, double alpha0);

// Same for general b; the path-dependent terms reduce to tr(b^T ito_linv) and
// vec(b)^T op_int vec(b).
double loglik_gen(const PathStats& stats, const Mat& b, double alpha, double alpha0);

// Local expansion statistics at theta = (b, alpha):
//   Lambda = (d1 u1 N_T + d2 tr(u2 M_T)) / 2
//   Gamma  = d2^2 tr(u2^2 R_T) + T d1 d2 u1 tr(u2) + d1^2 u1^2 Qinv_T / 4
std::pair<double, double> lan_statistics(const PathStats& stats, const Mat& b, double alpha,
                                         double u1, const Mat& u2, double d1, double d2);

// Quadratic-variation estimate of a, node transform Y = (a^T)^{-1} X a^{-1},
// joint symmetric estimation on Y, map back b_X = a^T b_Y (a^T)^{-1}.
// Pass known_a to skip the estimation step.
Estimate full_pipeline(const SamplePath& path, const std::optional<Mat>& known_a = std::nullopt);

}  // namespace wishart
