#include "wishart/mle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "wishart/linops.hpp"

namespace wishart {

std::string variant_name(EstimatorVariant v) {
  switch (v) {
    case EstimatorVariant::JointSym: return "joint-sym";
    case EstimatorVariant::JointGen: return "joint-gen";
    case EstimatorVariant::BSym: return "b-sym";
    case EstimatorVariant::BGen: return "b-gen";
    case EstimatorVariant::BDiag: return "b-diag";
    case EstimatorVariant::Pipeline: return "pipeline";
  }
  throw ConfigError("variant_name: unknown variant");
}

EstimatorVariant variant_from_name(const std::string& name) {
  if (name == "joint-sym") return EstimatorVariant::JointSym;
  if (name == "joint-gen") return EstimatorVariant::JointGen;
  if (name == "b-sym") return EstimatorVariant::BSym;
  if (name == "b-gen") return EstimatorVariant::BGen;
  if (name == "b-diag") return EstimatorVariant::BDiag;
  if (name == "pipeline") return EstimatorVariant::Pipeline;
  throw ConfigError("variant_from_name: unknown estimator '" + name + "'");
}

namespace {

void require_general(const PathStats& stats, const char* who) {
  if (!stats.has_general)
    throw MissingStats(std::string(who) + ": path statistics lack the general-b accumulators");
}

double eig_cond(const LopSolver& sol) {
  const auto& ev = sol.eigenvalues();
  const double lo = ev.minCoeff(), hi = ev.maxCoeff();
  return lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
}

double rel_residual(const Mat& lhs, const Mat& rhs) {
  return (lhs - rhs).norm() / std::max(1.0, rhs.norm());
}

}  // namespace

Estimate mle_joint_sym(const PathStats& stats) {
  const int d = stats.d;
  const double T = stats.T;
  const double q = 1.0 / stats.qinv();
  const double z = stats.z();

  LopSolver rsol(stats.R_T);
  rsol.require_posdef();
  const Mat rhs = stats.X_T - stats.x0 - T * (q * z + 1 + d) * Mat::Identity(d, d);
  const Mat b_hat = rsol.solve(rhs, T * T * q);

  Estimate est;
  est.variant = EstimatorVariant::JointSym;
  est.b_hat = b_hat;
  est.has_alpha = true;
  est.alpha_hat = 1 + d + q * (z - 2 * T * b_hat.trace());
  est.residual = rel_residual(lop_apply(stats.R_T, T * T * q, b_hat), rhs);
  est.cond = eig_cond(rsol);
  return est;
}

Estimate mle_joint_gen(const PathStats& stats) {
  require_general(stats, "mle_joint_gen");
  const int d = stats.d;
  const int n = d * d;
  const double T = stats.T;
  const Vec vec_id = vec_rm(Mat::Identity(d, d));

  Mat sys = Mat::Zero(n + 1, n + 1);
  sys.topLeftCorner(n, n) = stats.op_int;
  sys.topRightCorner(n, 1) = 0.5 * T * vec_id;
  sys.bottomLeftCorner(1, n) = -0.5 * T * vec_id.transpose();
  sys(n, n) = -0.25 * stats.qinv();

  Vec rhs(n + 1);
  rhs.head(n) = vec_rm(stats.ito_linv);
  rhs(n) = -0.25 * stats.z() - 0.25 * (1 + d) * stats.qinv();

  Eigen::JacobiSVD<Mat> svd(sys, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0) || smax / smin > kCondLimit)
    throw SingularSystem("mle_joint_gen: score system is numerically singular");
  const Vec sol = svd.solve(rhs);

  Estimate est;
  est.variant = EstimatorVariant::JointGen;
  est.b_hat = unvec_rm(sol.head(n), d);
  est.has_alpha = true;
  est.alpha_hat = sol(n);
  est.residual = (sys * sol - rhs).norm() / std::max(1.0, rhs.norm());
  est.cond = smax / smin;
  return est;
}

Estimate mle_b_sym(const PathStats& stats, double alpha) {
  const int d = stats.d;
  LopSolver rsol(stats.R_T);
  rsol.require_posdef();
  const Mat rhs = stats.X_T - stats.x0 - alpha * stats.T * Mat::Identity(d, d);
  const Mat b_hat = rsol.solve(rhs);

  Estimate est;
  est.variant = EstimatorVariant::BSym;
  est.b_hat = b_hat;
  est.residual = rel_residual(lop_apply(stats.R_T, 0.0, b_hat), rhs);
  est.cond = eig_cond(rsol);
  return est;
}

Estimate mle_b_gen(const PathStats& stats, double alpha) {
  require_general(stats, "mle_b_gen");
  const int d = stats.d;
  const double T = stats.T;
  const Vec rhs = vec_rm((stats.ito_linv - 0.5 * alpha * T * Mat::Identity(d, d)).eval());

  Eigen::SelfAdjointEigenSolver<Mat> eig(sympart(stats.op_int));
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0) || hi / lo > kCondLimit)
    throw SingularSystem("mle_b_gen: integrated operator is numerically singular");
  const Vec sol =
      eig.eigenvectors() *
      (eig.eigenvectors().transpose() * rhs).cwiseQuotient(eig.eigenvalues()).matrix();

  Estimate est;
  est.variant = EstimatorVariant::BGen;
  est.b_hat = unvec_rm(sol, d);
  est.residual = (stats.op_int * sol - rhs).norm() / std::max(1.0, rhs.norm());
  est.cond = hi / lo;
  return est;
}

Estimate mle_b_diag(const PathStats& stats, double alpha) {
  const int d = stats.d;
  Mat b_hat = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const double r = stats.R_T(i, i);
    if (!(r > 0)) throw DegenerateDiagonal("mle_b_diag: nonpositive integrated diagonal");
    b_hat(i, i) = (stats.X_T(i, i) - stats.x0(i, i) - alpha * stats.T) / (2 * r);
  }
  Estimate est;
  est.variant = EstimatorVariant::BDiag;
  est.b_hat = b_hat;
  return est;
}

double loglik_sym(const PathStats& stats, const Mat& b, double alpha, double alpha0) {
  if (!is_symmetric(b)) throw ConfigError("loglik_sym: b must be symmetric");
  const int d = stats.d;
  const double da = alpha - alpha0;
  return 0.25 * da * stats.z() + 0.5 * ((b * stats.X_T).trace() - (b * stats.x0).trace()) -
         0.5 * (b * b * stats.R_T).trace() -
         0.25 * da * (0.5 * (alpha + alpha0) - 1 - d) * stats.qinv() -
         0.5 * alpha * stats.T * b.trace();
}

double loglik_gen(const PathStats& stats, const Mat& b, double alpha, double alpha0) {
  require_general(stats, "loglik_gen");
  const int d = stats.d;
  const double da = alpha - alpha0;
  const Vec vb = vec_rm(b);
  return 0.25 * da * stats.z() + (b.transpose() * stats.ito_linv).trace() -
         0.5 * vb.dot(stats.op_int * vb) -
         0.25 * da * (0.5 * (alpha + alpha0) - 1 - d) * stats.qinv() -
         0.5 * alpha * stats.T * b.trace();
}

std::pair<double, double> lan_statistics(const PathStats& stats, const Mat& b, double alpha,
                                         double u1, const Mat& u2, double d1, double d2) {
  if (!is_symmetric(u2)) throw ConfigError("lan_statistics: u2 must be symmetric");
  const auto [m, nt] = martingale_stats(stats, b, alpha);
  const double lambda = 0.5 * (d1 * u1 * nt + d2 * (u2 * m).trace());
  const double gamma = d2 * d2 * (u2 * u2 * stats.R_T).trace() +
                       stats.T * d1 * d2 * u1 * u2.trace() +
                       0.25 * d1 * d1 * u1 * u1 * stats.qinv();
  return {lambda, gamma};
}

Estimate full_pipeline(const SamplePath& path, const std::optional<Mat>& known_a) {
  const int d = static_cast<int>(path.states.front().rows());

  Mat a;
  bool estimated_a = false, projected = false;
  if (known_a) {
    a = *known_a;
    if (a.rows() != d || a.cols() != d)
      throw DimensionMismatch("full_pipeline: known a has wrong shape");
  } else {
    const AtaEstimate ata = estimate_ata(path);
    a = ata.a_hat;
    estimated_a = true;
    projected = ata.projected;
  }

  Eigen::PartialPivLU<Mat> lu(a);
  const Mat a_inv = lu.inverse();
  if (!a_inv.allFinite()) throw NotInvertible("full_pipeline: diffusion estimate not invertible");
  const Mat at_inv = a_inv.transpose();

  SamplePath ypath;
  ypath.times = path.times;
  ypath.euler_fallbacks = path.euler_fallbacks;
  ypath.states.reserve(path.states.size());
  for (const Mat& x : path.states) ypath.states.push_back(sympart(at_inv * x * a_inv));
  // placeholder parameters; the accumulators only read times and states
  ypath.spec = WishartSpec::canonical(ypath.states.front(), 2 * d, Mat::Zero(d, d));

  StatsOptions opts;
  opts.qcov = false;
  opts.general_ops = false;
  const Estimate inner = mle_joint_sym(path_functionals(ypath, opts));

  Estimate est;
  est.variant = EstimatorVariant::Pipeline;
  est.b_hat = a.transpose() * inner.b_hat * at_inv;
  est.has_alpha = true;
  est.alpha_hat = inner.alpha_hat;
  est.has_a = estimated_a;
  if (estimated_a) est.a_hat = a;
  est.residual = inner.residual;
  est.cond = inner.cond;
  est.ata_projected = projected;
  return est;
}

}  // namespace wishart
