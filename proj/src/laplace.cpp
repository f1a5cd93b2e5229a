#include "wishart/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace wishart {

namespace {

// cosh(sqrt(z) t) and sinh(sqrt(z) t)/sqrt(z), continued through z <= 0.
double cosh_sqrt(double z, double t) {
  const double zt2 = z * t * t;
  if (std::abs(zt2) < 1e-8) return 1.0 + zt2 / 2.0 + zt2 * zt2 / 24.0;
  if (z > 0.0) return std::cosh(std::sqrt(z) * t);
  return std::cos(std::sqrt(-z) * t);
}

double sinhc_sqrt(double z, double t) {
  const double zt2 = z * t * t;
  if (std::abs(zt2) < 1e-8) return t * (1.0 + zt2 / 6.0 + zt2 * zt2 / 120.0);
  if (z > 0.0) return std::sinh(std::sqrt(z) * t) / std::sqrt(z);
  return std::sin(std::sqrt(-z) * t) / std::sqrt(-z);
}

// PSD up to cancellation noise. Boundary certificates arise as differences of
// like-sized terms, so the admissible slack must scale with those terms, not
// with the (possibly fully cancelled) result.
bool psd_within_tol(const Mat& m, double term_scale) {
  const auto ev = sym_eig(sympart(m)).eigenvalues();
  return ev.minCoeff() >= -kPsdTolFactor * std::max(term_scale, ev.cwiseAbs().maxCoeff());
}

void require_canonical(const WishartSpec& spec, const char* who) {
  if (!spec.is_canonical())
    throw ConfigError(std::string(who) + ": spec must be canonical (a = I, b symmetric)");
}

double log_det_or_throw(const Mat& V) {
  Eigen::PartialPivLU<Mat> lu(V);
  const Mat& u = lu.matrixLU();
  double logdet = 0.0;
  double sign = lu.permutationP().determinant();
  for (int i = 0; i < u.rows(); ++i) {
    const double p = u(i, i);
    if (p == 0.0) throw NumericalBreakdown("joint_laplace: det V = 0 at evaluation time");
    sign *= (p > 0.0) ? 1.0 : -1.0;
    logdet += std::log(std::abs(p));
  }
  if (sign <= 0.0) throw NumericalBreakdown("joint_laplace: det V <= 0 at evaluation time");
  return logdet;
}

double joint_laplace_unchecked(const WishartSpec& spec, const Mat& v, const Mat& w, double t) {
  const VPair p = v_matrices(v, w, spec.b, t);
  const double logdet = log_det_or_throw(p.V);
  const Mat g = p.Vprime * p.V.inverse() + spec.b;
  const double log_value =
      -0.5 * spec.alpha * spec.b.trace() * t - 0.5 * spec.alpha * logdet - 0.5 * (g * spec.x).trace();
  return std::exp(log_value);
}

}  // namespace

VPair v_matrices(const Mat& v, const Mat& w, const Mat& b, double t, VRoute route) {
  if (t < 0.0) throw ConfigError("v_matrices: t < 0");
  VPair out;
  out.vtilde = sympart(v + b * b);
  out.wtilde = sympart(w - b);
  if (route == VRoute::Spectral) {
    auto es = sym_eig(out.vtilde);
    Vec c(es.eigenvalues().size()), s(es.eigenvalues().size());
    for (int i = 0; i < c.size(); ++i) {
      c(i) = cosh_sqrt(es.eigenvalues()(i), t);
      s(i) = sinhc_sqrt(es.eigenvalues()(i), t);
    }
    const Mat& o = es.eigenvectors();
    const Mat cm = o * c.asDiagonal() * o.transpose();
    const Mat sm = o * s.asDiagonal() * o.transpose();
    out.V = sm * out.wtilde + cm;
    out.Vprime = cm * out.wtilde + out.vtilde * sm;
  } else {
    const int d = static_cast<int>(v.rows());
    const Mat vt2 = out.vtilde * (t * t);
    Mat term_s = t * Mat::Identity(d, d);  // t^{2k+1} vtilde^k/(2k+1)!
    Mat term_c = Mat::Identity(d, d);      // t^{2k} vtilde^k/(2k)!
    Mat sum_s = term_s, sum_c = term_c;
    for (int k = 1; k <= 200; ++k) {
      term_s = vt2 * term_s / ((2.0 * k) * (2.0 * k + 1.0));
      term_c = vt2 * term_c / ((2.0 * k - 1.0) * (2.0 * k));
      sum_s += term_s;
      sum_c += term_c;
      const double rel = std::max(term_s.cwiseAbs().maxCoeff(), term_c.cwiseAbs().maxCoeff());
      const double ref = std::max(sum_s.cwiseAbs().maxCoeff(), sum_c.cwiseAbs().maxCoeff());
      if (k > 2 && rel <= 1e-16 * std::max(ref, 1.0)) break;
    }
    out.V = sum_s * out.wtilde + sum_c;
    out.Vprime = sum_c * out.wtilde + out.vtilde * sum_s;
  }
  return out;
}

std::optional<DomainCertificate> domain_check(const Mat& v, const Mat& w, const Mat& b,
                                              const Mat& a) {
  const int d = static_cast<int>(v.rows());
  const Mat ata = a.transpose() * a;
  const auto feasible = [&](const Mat& m) {
    const Mat t1 = b.transpose() * m + m * b;
    const Mat t2 = 2.0 * m * ata * m;
    const Mat c1 = sympart(0.5 * w + m);
    const Mat c2 = sympart(0.5 * v - t1 - t2);
    const double s1 = std::max(0.5 * w.cwiseAbs().maxCoeff(), m.cwiseAbs().maxCoeff());
    const double s2 = std::max({0.5 * v.cwiseAbs().maxCoeff(), t1.cwiseAbs().maxCoeff(),
                                t2.cwiseAbs().maxCoeff()});
    return psd_within_tol(c1, s1) && psd_within_tol(c2, s2);
  };

  std::vector<std::pair<Mat, int>> candidates;
  candidates.emplace_back(Mat::Zero(d, d), 0);
  candidates.emplace_back((-0.5 * w).eval(), 1);

  Eigen::FullPivLU<Mat> lu(ata);
  if (lu.isInvertible()) {
    const Mat ata_inv_b = lu.solve(b);
    if (is_symmetric(ata_inv_b, 1e-9)) {
      const Mat m2 = -0.5 * sympart(ata_inv_b);
      candidates.emplace_back(m2, 2);
      const Mat p = sympart(v + b.transpose() * lu.solve(b));
      if (is_psd(p)) {
        // m = -(a^T a)^{-1} b / 2 + a^{-1} sqrt(a (v + b^T (a^T a)^{-1} b) a^T) (a^T)^{-1} / 2
        const Mat a_inv = a.inverse();
        const Mat root = spd_sqrt(sympart(a * p * a.transpose()));
        candidates.emplace_back((m2 + 0.5 * sympart(a_inv * root * a_inv.transpose())).eval(), 3);
      }
    }
  }

  for (const auto& [m, idx] : candidates)
    if (feasible(m)) return DomainCertificate{m, idx};
  return std::nullopt;
}

double joint_laplace(const WishartSpec& spec, const Mat& v, const Mat& w, double t) {
  require_canonical(spec, "joint_laplace");
  spec.validate();
  if (!domain_check(v, w, spec.b, spec.a))
    throw DomainViolation("joint_laplace: no finiteness certificate for (v, w)");
  return joint_laplace_unchecked(spec, v, w, t);
}

double joint_laplace_general(const WishartSpec& spec, const Mat& v, const Mat& w, double t) {
  spec.validate();
  if (!spec.is_transformable()) throw NotTransformable("joint_laplace_general: spec");
  const WishartSpec canon = spec.to_canonical();
  const Mat vc = sympart(spec.a * v * spec.a.transpose());
  const Mat wc = sympart(spec.a * w * spec.a.transpose());
  if (!domain_check(v, w, spec.b, spec.a) && !domain_check(vc, wc, canon.b, canon.a))
    throw DomainViolation("joint_laplace_general: no finiteness certificate for (v, w)");
  return joint_laplace_unchecked(canon, vc, wc, t);
}

double riccati_oracle(const WishartSpec& spec, const Mat& v, const Mat& w, double t) {
  require_canonical(spec, "riccati_oracle");
  spec.validate();
  if (!domain_check(v, w, spec.b, spec.a))
    throw DomainViolation("riccati_oracle: no finiteness certificate for (v, w)");

  const Mat delta = -0.5 * v;
  const Mat gamma0 = -0.5 * w;
  const Mat& b = spec.b;
  const auto rhs = [&](const Mat& g) { return (g * b + b * g + 2.0 * g * g + delta).eval(); };

  const auto integrate = [&](long n) {
    const double h = t / static_cast<double>(n);
    Mat g = gamma0;
    double beta = 0.0;
    for (long i = 0; i < n; ++i) {
      if (g.cwiseAbs().maxCoeff() > 1e8) throw BlowUp("riccati_oracle: ||gamma|| > 1e8");
      const Mat k1 = rhs(g);
      const Mat k2 = rhs(g + 0.5 * h * k1);
      const Mat k3 = rhs(g + 0.5 * h * k2);
      const Mat k4 = rhs(g + h * k3);
      const Mat incr = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      // beta' = alpha tr(gamma): Simpson on the same stage values
      beta += spec.alpha * (h / 6.0) *
              (g.trace() + 2.0 * (g + 0.5 * h * k1).trace() + 2.0 * (g + 0.5 * h * k2).trace() +
               (g + h * k3).trace());
      g += incr;
    }
    return beta + (g * spec.x).trace();
  };

  if (t == 0.0) return std::exp((gamma0 * spec.x).trace());
  const double scale = 1.0 + w.cwiseAbs().maxCoeff() + v.cwiseAbs().maxCoeff() +
                       b.cwiseAbs().maxCoeff();
  long n = static_cast<long>(std::ceil(32.0 * std::max(1.0, t * scale)));
  double prev = integrate(n);
  for (int pass = 0; pass < 18; ++pass) {
    n *= 2;
    const double cur = integrate(n);
    if (std::abs(cur - prev) <= 1e-10 * std::max(1.0, t) * std::max(1.0, std::abs(cur)))
      return std::exp(cur);
    prev = cur;
  }
  throw NumericalBreakdown("riccati_oracle: step halving did not converge");
}

double stationary_laplace(double alpha, const Mat& b, const Mat& v) {
  if (!is_posdef((-sympart(b)).eval())) throw NotErgodic("stationary_laplace: b + b^T not negative definite");
  if (!is_psd(sympart(v))) throw NotPsd("stationary_laplace: v");
  const int d = static_cast<int>(b.rows());
  Mat m;
  if (is_symmetric(b))
    m = Mat::Identity(d, d) - b.inverse() * v;
  else
    m = Mat::Identity(d, d) + 2.0 * lyapunov_solve(b, Mat::Identity(d, d)) * v;
  const double det = m.determinant();
  if (det <= 0.0) throw NumericalBreakdown("stationary_laplace: nonpositive determinant");
  return std::pow(det, -0.5 * alpha);
}

double girsanov_identity_check(const WishartSpec& spec, const Mat& u, double T) {
  spec.validate();
  const Mat ata = spec.a.transpose() * spec.a;
  const Mat v = sympart(u * spec.b + spec.b.transpose() * u + u * ata * u);
  const Mat w = -u;
  const double value = joint_laplace_general(spec, v, w, T);
  const double log_shift = -0.5 * (u * spec.x).trace() - 0.5 * spec.alpha * T * (u * ata).trace();
  return value * std::exp(log_shift);
}

}  // namespace wishart
