#include "wishart/pathstats.hpp"

#include <cmath>

#include "wishart/linops.hpp"

namespace wishart {

namespace {

double uniform_dt(const SamplePath& path) {
  const int n = path.steps();
  if (n < 1) throw ConfigError("path_functionals: need at least one step");
  const double dt = path.times(1) - path.times(0);
  for (int i = 1; i <= n; ++i)
    if (std::abs(path.times(i) - i * dt) > 1e-9 * std::max(1.0, std::abs(path.times(n))))
      throw ConfigError("path_functionals: grid not uniform");
  return dt;
}

}  // namespace

PathStats path_functionals(const SamplePath& path, const StatsOptions& opts) {
  const int n = path.steps();
  const double dt = uniform_dt(path);
  const int d = static_cast<int>(path.states[0].rows());

  PathStats s;
  s.d = d;
  s.T = path.times(n);
  s.x0 = path.states.front();
  s.X_T = path.states.back();
  s.euler_fallbacks = path.euler_fallbacks;
  s.R_T = Mat::Zero(d, d);

  s.spd_path = true;
  double qinv = 0.0, logdet0 = 0.0, logdetT = 0.0;
  const bool want_node_ops = opts.qinv_z || opts.general_ops;
  if (opts.qcov) s.qcov = Mat::Zero(d * d, d * d);
  if (opts.general_ops) {
    s.ito_linv = Mat::Zero(d, d);
    s.op_int = Mat::Zero(d * d, d * d);
  }

  for (int i = 0; i <= n; ++i) {
    const Mat& xi = path.states[i];
    const double w = (i == 0 || i == n) ? 0.5 * dt : dt;
    s.R_T += w * xi;

    if (i < n && opts.qcov) {
      const Vec dx = vec_rm(path.states[i + 1] - xi);
      s.qcov.noalias() += dx * dx.transpose();
    }

    if (!want_node_ops) continue;
    const LopSolver sol(xi, /*clamp_floor=*/true);
    if (!sol.posdef()) {
      s.spd_path = false;
      continue;
    }
    qinv += w * sol.tr_inverse();
    if (i == 0) logdet0 = sol.eigenvalues().array().log().sum();
    if (i == n) logdetT = sol.eigenvalues().array().log().sum();
    if (opts.general_ops) {
      if (i < n) s.ito_linv += sol.solve(path.states[i + 1] - xi) * xi;
      s.op_int += w * operator_to_matrix([&](const Mat& e) { return sol.bar_apply(e); }, d);
    }
  }
  s.R_T = sympart(s.R_T);

  if (opts.qinv_z && s.spd_path) {
    s.has_qinv = true;
    s.Qinv_T = qinv;
    s.has_z = true;
    s.Z_T = logdetT - logdet0;
  }
  s.has_qcov = opts.qcov;
  s.has_general = opts.general_ops && s.spd_path;
  if (!s.has_general && opts.general_ops) {
    s.ito_linv.resize(0, 0);
    s.op_int.resize(0, 0);
  }
  return s;
}

AtaEstimate estimate_ata(const SamplePath& path) {
  StatsOptions opts;
  opts.qinv_z = false;
  opts.general_ops = false;
  const PathStats s = path_functionals(path, opts);
  const int d = s.d;
  const auto qc = [&](int i, int j, int k, int l) { return s.qcov(i * d + j, k * d + l); };

  Mat ata(d, d);
  for (int i = 0; i < d; ++i) {
    if (s.R_T(i, i) <= 0.0) throw DegenerateDiagonal("estimate_ata: int X_ii ds <= 0");
    ata(i, i) = 0.25 * qc(i, i, i, i) / s.R_T(i, i);
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      ata(i, j) = (0.5 * qc(i, j, i, i) - ata(i, i) * s.R_T(i, j)) / s.R_T(i, i);
    }

  AtaEstimate out;
  out.ata = sympart(ata);
  auto es = sym_eig(out.ata);
  const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
  if (es.eigenvalues().minCoeff() <= kSingularGuard * lmax) {
    out.projected = true;
    const Vec lam = es.eigenvalues().cwiseMax(kSingularGuard * std::max(lmax, 1e-300));
    out.ata = sympart(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
  }
  Eigen::LLT<Mat> llt(out.ata);
  if (llt.info() != Eigen::Success) throw DegenerateDiagonal("estimate_ata: Cholesky failed");
  out.a_hat = Mat(llt.matrixL()).transpose();
  return out;
}

std::pair<Mat, double> martingale_stats(const PathStats& stats, const Mat& b, double alpha) {
  const int d = stats.d;
  const Mat m = stats.X_T - stats.x0 - alpha * stats.T * Mat::Identity(d, d) -
                (b * stats.R_T + stats.R_T * b.transpose());
  const double nt =
      0.5 * (stats.z() - (alpha - 1.0 - d) * stats.qinv() - 2.0 * b.trace() * stats.T);
  return {m, nt};
}

}  // namespace wishart
