#pragma once

#include <utility>

#include "wishart/sim.hpp"
#include "wishart/types.hpp"

namespace wishart {

// Sufficient statistics of a discretely observed path. ds-integrals use the
// trapezoidal rule, dX-integrals left-point (Ito) sums. The d^2 x d^2 blocks
// use the row-major e_ij basis.
struct PathStats {
  int d = 0;
  double T = 0.0;
  Mat x0;
  Mat X_T;
  Mat R_T;  // int_0^T X_s ds

  bool has_qinv = false;
  double Qinv_T = 0.0;  // int_0^T tr(X_s^{-1}) ds
  bool has_z = false;
  double Z_T = 0.0;  // log det X_T - log det x0

  bool has_qcov = false;
  Mat qcov;  // [(ij),(kl)] = sum_i dX_ij dX_kl

  bool has_general = false;
  Mat ito_linv;  // sum_i L^{-1}_{X_i}(X_{i+1} - X_i) X_i
  Mat op_int;    // matrix of Y -> int_0^T bar-L_{X_s}(Y) ds

  bool spd_path = false;  // every node strictly positive definite
  int euler_fallbacks = 0;

  double qinv() const {
    if (!has_qinv) throw NonPositiveState("PathStats: Qinv_T undefined on this path");
    return Qinv_T;
  }
  double z() const {
    if (!has_z) throw NonPositiveState("PathStats: Z_T undefined on this path");
    return Z_T;
  }
};

struct StatsOptions {
  bool qinv_z = true;
  bool qcov = true;
  bool general_ops = true;
};

PathStats path_functionals(const SamplePath& path, const StatsOptions& opts = {});

struct AtaEstimate {
  Mat ata;    // symmetrized, PSD-projected estimate of a^T a
  Mat a_hat;  // upper-triangular Cholesky factor, a_hat^T a_hat = ata
  bool projected = false;
};

// Diffusion parameter from quadratic covariations:
// (a^T a)_ii = <X_ii>_T / (4 int X_ii ds),
// (a^T a)_ij = (<X_ij, X_ii>_T / 2 - (a^T a)_ii int X_ij ds) / int X_ii ds,
// averaged over the two base choices for off-diagonal entries.
AtaEstimate estimate_ata(const SamplePath& path);

// M_T = X_T - x - alpha T I - (b R_T + R_T b^T),  N_T = (Z_T - (alpha-1-d) Qinv_T - 2 tr(b) T)/2.
std::pair<Mat, double> martingale_stats(const PathStats& stats, const Mat& b, double alpha);

}  // namespace wishart
