#include "wishart/limits.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "wishart/linops.hpp"
#include "wishart/sim.hpp"

namespace wishart {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_ergodic(const Mat& b) {
  if (!is_posdef(-sympart(b))) throw NotErgodic("ergodic_moments: -(b + b^T) not positive definite");
}

}  // namespace

ErgodicMoments ergodic_moments(double alpha, const Mat& b, int mc_samples, RngStream* rng) {
  const int d = static_cast<int>(b.rows());
  if (b.cols() != d) throw DimensionMismatch("ergodic_moments: b not square");
  if (alpha < d - 1 - 1e-12) throw InvalidDegree("ergodic_moments: alpha < d-1");
  require_ergodic(b);

  ErgodicMoments m;
  m.d = d;
  m.alpha = alpha;
  m.b = b;
  m.symmetric_b = is_symmetric(b);

  if (m.symmetric_b) {
    m.R_inf = sympart((-0.5 * alpha * b.inverse()).eval());
    m.Q_inf = alpha > d + 1 ? (alpha - (1 + d)) / (2 * (-b.trace())) : 0.0;
  } else {
    m.R_inf = lyapunov_solve(b, alpha * Mat::Identity(d, d));
    if (mc_samples <= 0)
      throw ConfigError("ergodic_moments: general drift needs Monte Carlo samples for Q_inf");
  }

  if (mc_samples > 0) {
    if (!rng) throw ConfigError("ergodic_moments: Monte Carlo sampling needs an RNG");
    const int n = d * d;
    Mat sum = Mat::Zero(n, n), sumsq = Mat::Zero(n, n);
    double trinv_sum = 0.0;
    for (int k = 0; k < mc_samples; ++k) {
      const Mat xs = stationary_sample(alpha, b, *rng);
      LopSolver sol(xs, /*clamp_floor=*/true);
      trinv_sum += sol.tr_inverse();
      const Mat op = operator_to_matrix([&](const Mat& y) { return sol.bar_apply(y); }, d);
      sum += op;
      sumsq += op.cwiseProduct(op);
    }
    m.mc_samples = mc_samples;
    m.checkL_inf = sum / mc_samples;
    if (mc_samples > 1) {
      const Mat var =
          (sumsq / mc_samples - m.checkL_inf.cwiseProduct(m.checkL_inf)).cwiseMax(0.0);
      m.mc_se = std::sqrt(var.maxCoeff() / (mc_samples - 1));
    }
    if (!m.symmetric_b) m.Q_inf = alpha > d + 1 ? mc_samples / trinv_sum : 0.0;
    const Vec vi = vec_rm(Mat::Identity(d, d));
    m.hatL_inf = m.checkL_inf - m.Q_inf * vi * vi.transpose();
  }
  return m;
}

double matrix_gaussian_laplace(const Mat& c, const Mat& C) {
  return std::exp(2.0 * (c * c * C).trace());
}

double limit_laplace_joint_sym(const Mat& c, double lambda, const ErgodicMoments& m) {
  if (!(m.Q_inf > 0)) throw CaseParameterMismatch("limit_laplace_joint_sym: needs alpha > d+1");
  LopSolver rsol(m.R_inf);
  const double denom = 1.0 - m.Q_inf * rsol.tr_inverse();
  if (!(denom > 0)) throw NumericalBreakdown("limit_laplace_joint_sym: ill-posed moments");
  const double tr_crinv = (c * rsol.inverse()).trace();
  const Mat lc = rsol.solve(c, m.Q_inf);
  return std::exp(2 * m.Q_inf * lambda * lambda / denom -
                  2 * m.Q_inf * lambda * tr_crinv / denom + (c * lc).trace());
}

double limit_laplace_joint_gen(const Mat& c, double lambda, const ErgodicMoments& m) {
  if (!m.has_operators())
    throw CaseParameterMismatch("limit_laplace_joint_gen: moments lack operator matrices");
  if (!(m.Q_inf > 0)) throw CaseParameterMismatch("limit_laplace_joint_gen: needs alpha > d+1");
  LopSolver rsol(m.R_inf);
  const double denom = 1.0 - m.Q_inf * rsol.tr_inverse();
  if (!(denom > 0)) throw NumericalBreakdown("limit_laplace_joint_gen: ill-posed moments");
  const double tr_crinv = (c * rsol.inverse()).trace();
  const Vec vm = m.hatL_inf.ldlt().solve(vec_rm(c));
  const double tr_m = unvec_rm(vm, m.d).trace();
  const double quad = 0.5 * vm.dot(m.checkL_inf * vm);
  const double tail = tr_crinv * m.Q_inf / denom * (0.5 * tr_crinv / denom - tr_m);
  return std::exp(2 * m.Q_inf * lambda * lambda / denom -
                  2 * m.Q_inf * lambda * tr_crinv / denom + quad + tail);
}

double limit_laplace_b(const Mat& c, const ErgodicMoments& m, bool general) {
  if (!general) {
    LopSolver rsol(m.R_inf);
    return std::exp((c * rsol.solve(c)).trace());
  }
  if (!m.has_operators())
    throw CaseParameterMismatch("limit_laplace_b: moments lack operator matrices");
  const Vec vc = vec_rm(c);
  return std::exp(0.5 * vc.dot(m.checkL_inf.ldlt().solve(vc)));
}

std::string limit_case_name(LimitCase c) {
  switch (c) {
    case LimitCase::JointErgodic: return "joint-ergodic";
    case LimitCase::JointErgodicCritical: return "joint-ergodic-critical";
    case LimitCase::JointErgodicGeneral: return "joint-ergodic-general";
    case LimitCase::BErgodic: return "b-ergodic";
    case LimitCase::BErgodicGeneral: return "b-ergodic-general";
    case LimitCase::JointZeroDrift: return "joint-zero-drift";
    case LimitCase::JointZeroDriftCritical: return "joint-zero-drift-critical";
    case LimitCase::BZeroDrift: return "b-zero-drift";
    case LimitCase::BExpanding: return "b-expanding";
    case LimitCase::BDiagonal: return "b-diagonal";
  }
  throw ConfigError("limit_case_name: unknown case");
}

LimitCase limit_case_from_name(const std::string& name) {
  for (LimitCase c :
       {LimitCase::JointErgodic, LimitCase::JointErgodicCritical, LimitCase::JointErgodicGeneral,
        LimitCase::BErgodic, LimitCase::BErgodicGeneral, LimitCase::JointZeroDrift,
        LimitCase::JointZeroDriftCritical, LimitCase::BZeroDrift, LimitCase::BExpanding,
        LimitCase::BDiagonal})
    if (limit_case_name(c) == name) return c;
  throw ConfigError("limit_case_from_name: unknown case '" + name + "'");
}

bool LimitLaw::has_scalar() const {
  switch (kind) {
    case LimitCase::JointErgodic:
    case LimitCase::JointErgodicCritical:
    case LimitCase::JointErgodicGeneral:
    case LimitCase::JointZeroDrift:
    case LimitCase::JointZeroDriftCritical:
      return true;
    default:
      return false;
  }
}

bool LimitLaw::closed_form() const {
  switch (kind) {
    case LimitCase::JointErgodic:
    case LimitCase::JointErgodicCritical:
    case LimitCase::JointErgodicGeneral:
    case LimitCase::BErgodic:
    case LimitCase::BErgodicGeneral:
      return true;
    default:
      return false;
  }
}

namespace {

// Limit of (M_T/sqrt(T), N_T/sqrt(T)): G ~ cov tensor of R_inf, E[G_ij H] = 2 d_ij,
// Var(H) = 1/Q_inf. H = tr(sqrt(R_inf)^{-1} Ghat) + sqrt(1/Q - tr(R_inf^{-1})) Z.
std::pair<Mat, double> bracket_pair_sample(const Mat& R_inf, double Q_inf, RngStream& rng) {
  const int d = static_cast<int>(R_inf.rows());
  LopSolver rsol(R_inf);
  const Mat root = spd_sqrt(R_inf);
  const Mat root_inv = spd_sqrt(rsol.inverse());
  const double sig0_sq = 1.0 / Q_inf - rsol.tr_inverse();
  if (sig0_sq < -1e-10) throw NumericalBreakdown("bracket_pair_sample: negative residual variance");
  const Mat ghat = matrix_gaussian_iid(d, rng);
  const Mat gt = root * ghat + ghat.transpose() * root;
  const double ht = (root_inv.transpose() * ghat).trace() +
                    std::sqrt(std::max(0.0, sig0_sq)) * rng.normal();
  return {gt, ht};
}

Mat cov_sqrt(const Mat& cov) {
  return spd_sqrt(sympart(cov));
}

}  // namespace

void check_case_parameters(LimitCase kind, const WishartSpec& spec) {
  spec.validate();
  if ((spec.a - Mat::Identity(spec.d, spec.d)).cwiseAbs().maxCoeff() > 1e-9)
    throw CaseParameterMismatch("limit_law: limit laws are stated for a = I processes");
  const int d = spec.d;
  const double crit_tol = 1e-9;
  const bool sym = is_symmetric(spec.b);
  switch (kind) {
    case LimitCase::JointErgodic:
      if (!sym || !(spec.alpha > d + 1))
        throw CaseParameterMismatch("limit_law: joint-ergodic needs symmetric b, alpha > d+1");
      break;
    case LimitCase::JointErgodicCritical:
      if (!sym || std::abs(spec.alpha - (d + 1)) > crit_tol)
        throw CaseParameterMismatch("limit_law: joint-ergodic-critical needs alpha = d+1");
      break;
    case LimitCase::JointErgodicGeneral:
      if (!(spec.alpha > d + 1))
        throw CaseParameterMismatch("limit_law: joint-ergodic-general needs alpha > d+1");
      break;
    case LimitCase::BErgodic:
      if (!sym) throw CaseParameterMismatch("limit_law: b-ergodic needs symmetric b");
      break;
    case LimitCase::BErgodicGeneral:
      break;
    case LimitCase::JointZeroDrift:
      if (spec.b.cwiseAbs().maxCoeff() > 0 || !(spec.alpha > d + 1))
        throw CaseParameterMismatch("limit_law: joint-zero-drift needs b = 0, alpha > d+1");
      break;
    case LimitCase::JointZeroDriftCritical:
      if (spec.b.cwiseAbs().maxCoeff() > 0 || std::abs(spec.alpha - (d + 1)) > crit_tol)
        throw CaseParameterMismatch("limit_law: joint-zero-drift-critical needs b = 0, alpha = d+1");
      break;
    case LimitCase::BZeroDrift:
      if (spec.b.cwiseAbs().maxCoeff() > 0)
        throw CaseParameterMismatch("limit_law: b-zero-drift needs b = 0");
      break;
    case LimitCase::BExpanding: {
      const double b0 = spec.b(0, 0);
      if (!(b0 > 0) || (spec.b - b0 * Mat::Identity(d, d)).cwiseAbs().maxCoeff() > crit_tol)
        throw CaseParameterMismatch("limit_law: b-expanding needs b = b0 I with b0 > 0");
      break;
    }
    case LimitCase::BDiagonal:
      if (!spec.b.isDiagonal(crit_tol))
        throw CaseParameterMismatch("limit_law: b-diagonal needs diagonal b");
      break;
  }
}

LimitLaw limit_law(LimitCase kind, const WishartSpec& spec, const ErgodicMoments* moments,
                   int n_inner) {
  check_case_parameters(kind, spec);
  const int d = spec.d;

  LimitLaw law;
  law.kind = kind;
  law.d = d;
  law.alpha = spec.alpha;
  law.b = spec.b;
  law.x = spec.x;
  law.n_inner = n_inner;

  auto need_moments = [&](bool operators) {
    if (!moments) throw CaseParameterMismatch("limit_law: ergodic case needs moments");
    if (moments->d != d || std::abs(moments->alpha - spec.alpha) > 1e-9 ||
        (moments->b - spec.b).cwiseAbs().maxCoeff() > 1e-9)
      throw CaseParameterMismatch("limit_law: moments computed for different parameters");
    if (operators && !moments->has_operators())
      throw CaseParameterMismatch("limit_law: case needs sampled operator matrices");
    law.moments = *moments;
  };

  switch (kind) {
    case LimitCase::JointErgodic:
    case LimitCase::JointErgodicCritical:
    case LimitCase::BErgodic:
      need_moments(false);
      break;
    case LimitCase::JointErgodicGeneral: {
      need_moments(true);
      const int n = d * d;
      Mat cov(n + 1, n + 1);
      cov.topLeftCorner(n, n) = law.moments.checkL_inf;
      cov.topRightCorner(n, 1) = vec_rm(Mat::Identity(d, d));
      cov.bottomLeftCorner(1, n) = vec_rm(Mat::Identity(d, d)).transpose();
      cov(n, n) = 1.0 / law.moments.Q_inf;
      law.joint_cov_sqrt = cov_sqrt(cov);
      break;
    }
    case LimitCase::BErgodicGeneral: {
      need_moments(true);
      Eigen::SelfAdjointEigenSolver<Mat> eig(sympart(law.moments.checkL_inf));
      if (!(eig.eigenvalues().minCoeff() > 0))
        throw NumericalBreakdown("limit_law: sampled operator matrix not positive definite");
      law.gen_b_cov_sqrt = eig.eigenvectors() *
                           eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                           eig.eigenvectors().transpose();
      break;
    }
    default:
      break;
  }
  return law;
}

std::pair<Mat, double> LimitLaw::sample(RngStream& rng) const {
  switch (kind) {
    case LimitCase::JointErgodic: {
      const double q = moments.Q_inf;
      const auto [gt, ht] = bracket_pair_sample(moments.R_inf, q, rng);
      LopSolver rsol(moments.R_inf);
      const Mat g = rsol.solve(gt - 2 * q * ht * Mat::Identity(d, d), q);
      return {g, 2 * q * (ht - g.trace())};
    }
    case LimitCase::JointErgodicCritical: {
      const Mat g = lop_invert(moments.R_inf, 0.0, matrix_gaussian_cov(moments.R_inf, rng));
      const double a = -b.trace();
      const double z = rng.normal();
      return {g, 2 * z * z / a};
    }
    case LimitCase::JointErgodicGeneral: {
      const int n = d * d;
      Vec z(n + 1);
      for (int i = 0; i <= n; ++i) z(i) = rng.normal();
      const Vec y = joint_cov_sqrt * z;
      const double q = moments.Q_inf;
      const Mat ghat = unvec_rm(y.head(n), d);
      const double hhat = y(n);
      const Mat g = unvec_rm(
          Vec(moments.hatL_inf.ldlt().solve(vec_rm(ghat - q * hhat * Mat::Identity(d, d)))), d);
      return {g, 2 * q * (hhat - g.trace())};
    }
    case LimitCase::BErgodic:
      return {lop_invert(moments.R_inf, 0.0, matrix_gaussian_cov(moments.R_inf, rng)), kNaN};
    case LimitCase::BErgodicGeneral: {
      const int n = d * d;
      Vec z(n);
      for (int i = 0; i < n; ++i) z(i) = rng.normal();
      return {unvec_rm(Vec(gen_b_cov_sqrt * z), d), kNaN};
    }
    case LimitCase::JointZeroDrift: {
      const auto [x1, r1] = wishart0_joint_sample(alpha, d, n_inner, rng);
      const Mat g = lop_invert(r1, 0.0, x1 - alpha * Mat::Identity(d, d));
      return {g, 2 * std::sqrt((alpha - (d + 1)) / d) * rng.normal()};
    }
    case LimitCase::JointZeroDriftCritical: {
      const auto [x1, r1] = wishart0_joint_sample(alpha, d, n_inner, rng);
      const Mat g = lop_invert(r1, 0.0, x1 - alpha * Mat::Identity(d, d));
      const double z = rng.normal();
      return {g, 4 * z * z / d};
    }
    case LimitCase::BZeroDrift: {
      const auto [x1, r1] = wishart0_joint_sample(alpha, d, n_inner, rng);
      return {lop_invert(r1, 0.0, x1 - alpha * Mat::Identity(d, d)), kNaN};
    }
    case LimitCase::BExpanding: {
      const double b0 = b(0, 0);
      const WishartSpec zero = WishartSpec::canonical(x / (2 * b0), alpha, Mat::Zero(d, d));
      const Mat xs = transition_sample(zero, zero.x, 1.0 / (4 * b0 * b0), rng);
      return {lop_invert(xs, 0.0, matrix_gaussian_cov(xs, rng)), kNaN};
    }
    case LimitCase::BDiagonal: {
      Mat g = Mat::Zero(d, d);
      for (int i = 0; i < d; ++i) {
        const double bi = b(i, i);
        if (bi < 0) {
          g(i, i) = std::sqrt(-2 * bi / alpha) * rng.normal();
        } else if (bi == 0) {
          const auto [x1, r1] = wishart0_joint_sample(alpha, 1, n_inner, rng);
          g(i, i) = (x1(0, 0) - alpha) / (2 * r1(0, 0));
        } else {
          const WishartSpec zero = WishartSpec::canonical(
              Mat::Constant(1, 1, x(i, i) / (2 * bi)), alpha, Mat::Zero(1, 1));
          const Mat xs = transition_sample(zero, zero.x, 1.0 / (4 * bi * bi), rng);
          g(i, i) = rng.normal() / std::sqrt(xs(0, 0));
        }
      }
      return {g, kNaN};
    }
  }
  throw ConfigError("LimitLaw::sample: unknown case");
}

LimitLaw::Value LimitLaw::laplace(const Mat& c, double lambda, RngStream* rng,
                                  int n_samples) const {
  if (!has_scalar() && lambda != 0.0)
    throw CaseParameterMismatch("LimitLaw::laplace: this case has no scalar part");

  switch (kind) {
    case LimitCase::JointErgodic:
      return {limit_laplace_joint_sym(sympart(c), lambda, moments), 0.0};
    case LimitCase::JointErgodicCritical: {
      const double a = -b.trace();
      if (!(lambda < a / 4)) throw DomainViolation("LimitLaw::laplace: lambda >= tr(-b)/4");
      return {limit_laplace_b(sympart(c), moments, false) / std::sqrt(1 - 4 * lambda / a), 0.0};
    }
    case LimitCase::JointErgodicGeneral:
      return {limit_laplace_joint_gen(c, lambda, moments), 0.0};
    case LimitCase::BErgodic:
      return {limit_laplace_b(sympart(c), moments, false), 0.0};
    case LimitCase::BErgodicGeneral:
      return {limit_laplace_b(c, moments, true), 0.0};
    default:
      break;
  }

  if (!rng || n_samples <= 0)
    throw ConfigError("LimitLaw::laplace: Monte Carlo case needs rng and sample count");

  double factor = 1.0;
  if (kind == LimitCase::JointZeroDrift) {
    factor = std::exp(2 * lambda * lambda * (alpha - (d + 1)) / d);
  } else if (kind == LimitCase::JointZeroDriftCritical) {
    if (!(lambda < d / 8.0)) throw DomainViolation("LimitLaw::laplace: lambda >= d/8");
    factor = 1.0 / std::sqrt(1 - 8 * lambda / d);
  }

  double sum = 0.0, sumsq = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    double term;
    if (kind == LimitCase::BExpanding) {
      const double b0 = b(0, 0);
      const WishartSpec zero = WishartSpec::canonical(x / (2 * b0), alpha, Mat::Zero(d, d));
      const Mat xs = transition_sample(zero, zero.x, 1.0 / (4 * b0 * b0), *rng);
      term = std::exp((c * lop_invert(xs, 0.0, sympart(c))).trace());
    } else {
      const auto [g, h] = sample(*rng);
      (void)h;
      term = std::exp(c.cwiseProduct(g).sum());
    }
    sum += term;
    sumsq += term * term;
  }
  const double mean = sum / n_samples;
  const double var = std::max(0.0, sumsq / n_samples - mean * mean);
  const double se = std::sqrt(var / std::max(1, n_samples - 1));
  return {mean * factor, se * factor};
}

}  // namespace wishart
