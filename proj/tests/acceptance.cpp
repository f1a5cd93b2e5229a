// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// run with a list of criterion numbers, or with no arguments for all twelve.
// Exit status is 0 only when every requested criterion passes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include <wishart/experiment.hpp>
#include <wishart/laplace.hpp>
#include <wishart/limits.hpp>
#include <wishart/linops.hpp>
#include <wishart/mle.hpp>
#include <wishart/pathstats.hpp>
#include <wishart/sim.hpp>

#include "util.hpp"

namespace {

using namespace wishart;
using testutil::random_mat;
using testutil::random_spd;
using testutil::random_sym;

double rel(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

double mat_rel(const Mat& got, const Mat& want) {
  return (got - want).cwiseAbs().maxCoeff() / std::max(1.0, want.cwiseAbs().maxCoeff());
}

Mat psd_probe(int d, double scale, RngStream& rng) {
  const Mat g = random_mat(d, 1.0, rng);
  return scale * g * g.transpose() / d;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_exp(const std::vector<double>& exponents) {
  std::vector<double> terms(exponents.size());
  for (std::size_t i = 0; i < exponents.size(); ++i) terms[i] = std::exp(exponents[i]);
  MeanSe out;
  const double n = static_cast<double>(terms.size());
  out.mean = pairwise_sum(terms) / n;
  std::vector<double> sq(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double d = terms[i] - out.mean;
    sq[i] = d * d;
  }
  out.se = std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
  return out;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

double median_abs(const std::vector<double>& v) {
  std::vector<double> a(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) a[i] = std::abs(v[i]);
  return quantile(a, 0.5);
}

double iqr(const std::vector<double>& v) {
  return quantile(v, 0.75) - quantile(v, 0.25);
}

// 1. Inverting the drift operator is consistent with applying it, and its
//    trace obeys the closed formula, across dimensions and trace shifts.
bool crit_operator_identities(std::string& detail) {
  RngStream rng(201, 0);
  const int dims[] = {1, 2, 3, 4, 8};
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int d = dims[k % 5];
    const Mat x = random_spd(d, 0.3, rng);
    const Mat y = random_sym(d, 1.0, rng);
    const Mat xinv = x.inverse();
    const double trinv = xinv.trace();
    const double shift = (-2.0 + 2.7 * rng.uniform()) / trinv;
    const Mat c = lop_invert(x, shift, y);
    worst = std::max(worst, mat_rel(lop_apply(x, shift, c), y));
    const double tr_want = (xinv * y).trace() / (2.0 * (1.0 - shift * trinv));
    worst = std::max(worst, rel(c.trace(), tr_want));
  }
  detail = "max rel err " + fmt(worst) + " over 100 instances";
  return worst <= 1e-10;
}

// 2. The closed-form transform of (X_T, R_T) agrees with direct integration
//    of the governing ODE system, for symmetric and transformable drifts.
bool crit_transform_vs_oracle(std::string& detail) {
  RngStream rng(202, 0);
  double worst = 0.0;
  for (int k = 0; k < 30; ++k) {
    const int d = 1 + k % 4;
    const Mat x = random_spd(d, 0.3, rng);
    const Mat b = random_sym(d, 0.5, rng) - 0.8 * Mat::Identity(d, d);
    const double alpha = d - 1 + 0.5 + 2.0 * rng.uniform();
    const WishartSpec spec = WishartSpec::canonical(x, alpha, b);
    const Mat v = psd_probe(d, 0.5, rng);
    const Mat w = psd_probe(d, 0.5, rng);
    const double t = 0.3 + 1.5 * rng.uniform();
    worst = std::max(worst, rel(joint_laplace(spec, v, w, t), riccati_oracle(spec, v, w, t)));
  }
  for (int k = 0; k < 20; ++k) {
    const int d = 2 + k % 3;
    Mat a = random_mat(d, 0.3, rng);
    a.diagonal().array() += 1.4;
    const Mat at = a.transpose();
    const Mat s = random_sym(d, 0.4, rng) - 0.9 * Mat::Identity(d, d);
    const Mat b = at * s * at.inverse();
    const WishartSpec spec(random_spd(d, 0.3, rng), d + 0.3 + rng.uniform(), b, a);
    const Mat v = psd_probe(d, 0.4, rng);
    const Mat w = psd_probe(d, 0.4, rng);
    const double t = 0.3 + 1.4 * rng.uniform();
    const WishartSpec canon = spec.to_canonical();
    const Mat vc = sympart(a * v * at);
    const Mat wc = sympart(a * w * at);
    worst = std::max(worst,
                     rel(joint_laplace_general(spec, v, w, t), riccati_oracle(canon, vc, wc, t)));
  }
  detail = "max rel err " + fmt(worst) + " over 50 instances";
  return worst <= 1e-8;
}

// 3. The exponential-martingale identity evaluates to one.
bool crit_girsanov(std::string& detail) {
  RngStream rng(203, 0);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int d = 1 + k % 3;
    Mat a = random_mat(d, 0.3, rng);
    a.diagonal().array() += 1.4;
    const Mat at = a.transpose();
    const Mat s = random_sym(d, 0.4, rng);
    const Mat b = at * s * at.inverse();
    const WishartSpec spec(random_spd(d, 0.3, rng), d + 0.7 + rng.uniform(), b, a);
    const Mat u = random_sym(d, 0.3, rng);
    const double T = 0.5 + rng.uniform();
    worst = std::max(worst, std::abs(girsanov_identity_check(spec, u, T) - 1.0));
  }
  detail = "max |value - 1| = " + fmt(worst) + " over 20 instances";
  return worst <= 1e-9;
}

// 4. One exact transition step at a coarse dt reproduces the endpoint
//    marginal of the transform (v = 0 probes; R_T needs a fine grid and is
//    covered through the experiment criteria instead).
bool crit_kernel_exactness(std::string& detail) {
  Mat x(2, 2);
  x << 0.8, 0.5, 0.5, 1.0;
  const WishartSpec spec = WishartSpec::canonical(x, 4.5, -Mat::Identity(2, 2));
  const double dt = 0.5;
  const TransitionKernel kernel(spec, dt);

  std::vector<Mat> probes;
  probes.push_back(0.4 * Mat::Identity(2, 2));
  probes.push_back((Mat(2, 2) << 0.3, 0.1, 0.1, 0.2).finished());
  probes.push_back(0.8 * Mat::Identity(2, 2));
  probes.push_back((Mat(2, 2) << 0.5, -0.2, -0.2, 0.6).finished());
  probes.push_back((Mat(2, 2) << 1.0, 0.3, 0.3, 0.4).finished());

  RngStream rng(204, 0);
  const int n = 100000;
  std::vector<std::vector<double>> expo(probes.size());
  for (auto& e : expo) e.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Mat xt = kernel.sample(x, rng);
    for (std::size_t p = 0; p < probes.size(); ++p)
      expo[p].push_back(-0.5 * (probes[p] * xt).trace());
  }
  double worst = 0.0;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const MeanSe m = mean_exp(expo[p]);
    const double want = joint_laplace(spec, Mat::Zero(2, 2), probes[p], dt);
    worst = std::max(worst, std::abs(m.mean - want) / m.se);
  }
  detail = "max |z| = " + fmt(worst) + " over 5 probes, 1e5 draws";
  return worst <= 3.0;
}

// 5. The stationary sampler reproduces det(I - b^{-1} v)^{-alpha/2}.
bool crit_stationary_sampler(std::string& detail) {
  Mat b(2, 2);
  b << -1.0, 0.3, 0.3, -1.2;
  const double alpha = 4.5;

  std::vector<Mat> probes;
  probes.push_back(0.3 * Mat::Identity(2, 2));
  probes.push_back((Mat(2, 2) << 0.2, 0.1, 0.1, 0.4).finished());
  probes.push_back((Mat(2, 2) << 0.5, -0.15, -0.15, 0.25).finished());
  probes.push_back(0.05 * Mat::Identity(2, 2));
  probes.push_back((Mat(2, 2) << 0.6, 0.2, 0.2, 0.15).finished());

  RngStream rng(205, 0);
  const int n = 100000;
  std::vector<std::vector<double>> expo(probes.size());
  for (auto& e : expo) e.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Mat xs = stationary_sample(alpha, b, rng);
    for (std::size_t p = 0; p < probes.size(); ++p)
      expo[p].push_back(-(probes[p] * xs).trace());
  }
  double worst = 0.0;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const MeanSe m = mean_exp(expo[p]);
    const double want = stationary_laplace(alpha, b, probes[p]);
    worst = std::max(worst, std::abs(m.mean - want) / m.se);
  }
  detail = "max |z| = " + fmt(worst) + " over 5 probes, 1e5 draws";
  return worst <= 3.0;
}

// 6. Ergodic joint estimation: the variance of sqrt(T)(alpha_hat - alpha)
//    matches the limit value 2.25 and the probe panel agrees with the limit
//    transform.
//
//    Known to fail at this configuration. For alpha < d+3 the stationary law
//    of the smallest eigenvalue has density ~ lambda^{(alpha-d-1)/2} at zero,
//    so the gridpoint values of tr(X^-1) have infinite second moment. When a
//    gridpoint lands inside a near-singular dip (duration ~ lambda^2 << dt)
//    the trapezoidal Qinv_T overshoots the true integral by ~dt/lambda, and
//    that error enters alpha_hat linearly. The sample variance of the scaled
//    error therefore sits 15-40% above the continuous-record value 2.25 at
//    dt = 0.01 and is unstable in M (its population value is infinite for any
//    fixed dt > 0). Diagnostics: Var(2N_T) = 4 E[Qinv_T] holds to 0.7% at
//    dt = 1e-3 but is violated by ~45% at dt = 1e-2, with the excess entirely
//    in the top 0.1% of paths whose max gridpoint tr(X^-1) is in the
//    thousands. The b-channel identities hold at both step sizes, which is
//    why the pure-drift criteria are unaffected.
bool crit_ergodic_clt(std::string& detail) {
  Mat x(2, 2);
  x << 0.8, 0.5, 0.5, 1.0;
  ExperimentConfig c;
  c.spec = WishartSpec::canonical(x, 4.5, -Mat::Identity(2, 2));
  c.T = 200.0;
  c.N = 20000;
  c.M = 1000;
  c.estimator = EstimatorVariant::JointSym;
  c.limit_case = LimitCase::JointErgodic;
  c.scaling = "sqrt-t";
  c.seed = 206;
  c.limit_samples = 4000;
  const ExperimentReport r = run_experiment(c);

  std::vector<double> errs;
  for (const RepRecord& rec : r.reps)
    if (rec.ok && std::isfinite(rec.scaled_scalar)) errs.push_back(rec.scaled_scalar);
  if (errs.size() < 900) {
    detail = "only " + std::to_string(errs.size()) + " usable replications";
    return false;
  }
  const double mean = pairwise_sum(errs) / static_cast<double>(errs.size());
  double ss = 0.0;
  for (double e : errs) ss += (e - mean) * (e - mean);
  const double var = ss / (static_cast<double>(errs.size()) - 1.0);

  bool rows_ok = true;
  double worst_z = 0.0;
  for (const LaplaceRow& row : r.laplace) {
    if (row.rejected || !std::isfinite(row.z)) rows_ok = false;
    worst_z = std::max(worst_z, std::abs(row.z));
  }
  detail = "Var(sqrt(T)(alpha_hat - alpha)) = " + fmt(var) +
           " vs 2.25 within 15%; max probe |z| = " + fmt(worst_z);
  return rows_ok && r.failures == 0 && std::abs(var - 2.25) <= 0.15 * 2.25 && worst_z <= 3.0;
}

// 7. Expanding drift b = b0 I: the exponentially scaled errors match the
//    limit sampler entrywise (two-sample KS).
bool crit_expanding_ks(std::string& detail) {
  Mat x(2, 2);
  x << 0.5, 0.1, 0.1, 0.3;
  ExperimentConfig c;
  c.spec = WishartSpec::canonical(x, 4.5, 0.05 * Mat::Identity(2, 2));
  c.T = 100.0;
  c.N = 10000;
  c.M = 1000;
  c.estimator = EstimatorVariant::BSym;
  c.limit_case = LimitCase::BExpanding;
  c.scaling = "exp";
  c.seed = 207;
  c.limit_samples = 4000;
  const ExperimentReport r = run_experiment(c);

  bool ok = r.failures == 0 && !r.ks.empty();
  double min_p = 1.0;
  for (const KsRow& row : r.ks) {
    if (!std::isfinite(row.p_value)) ok = false;
    min_p = std::min(min_p, row.p_value);
  }
  detail = "min KS p-value " + fmt(min_p) + " over " + std::to_string(r.ks.size()) +
           " marginals";
  return ok && min_p > 0.01;
}

// 8. Zero drift: T-scaled errors of the drift-only estimator agree with the
//    limit sampler at the probe panel.
bool crit_zero_drift_probes(std::string& detail) {
  Mat x(2, 2);
  x << 1.0, 0.2, 0.2, 0.8;
  ExperimentConfig c;
  c.spec = WishartSpec::canonical(x, 3.5, Mat::Zero(2, 2));
  c.T = 100.0;
  c.N = 10000;
  c.M = 1000;
  c.estimator = EstimatorVariant::BSym;
  c.limit_case = LimitCase::BZeroDrift;
  c.scaling = "t";
  c.seed = 208;
  c.limit_samples = 4000;
  const ExperimentReport r = run_experiment(c);

  bool rows_ok = r.failures == 0 && !r.laplace.empty();
  double worst_z = 0.0;
  for (const LaplaceRow& row : r.laplace) {
    if (row.rejected || !std::isfinite(row.z)) rows_ok = false;
    worst_z = std::max(worst_z, std::abs(row.z));
  }
  detail = "max probe |z| = " + fmt(worst_z) + " over " + std::to_string(r.laplace.size()) +
           " probes";
  return rows_ok && worst_z <= 3.0;
}

// 9. Distinct positive diagonal drift: each diagonal error is O(1) under its
//    own exponential rate, and the off-diagonal error follows the faster
//    rate (degenerate under the slower one).
bool crit_diagonal_rates(std::string& detail) {
  Mat x(2, 2);
  x << 0.3, 0.1, 0.1, 0.2;
  const Mat b = (Vec(2) << 0.1, 0.005).finished().asDiagonal();
  const WishartSpec spec = WishartSpec::canonical(x, 3.5, b);
  const double T = 100.0;
  const int N = 10000, M = 300;

  StatsOptions opts;
  opts.qinv_z = false;
  opts.qcov = false;
  opts.general_ops = false;

  std::vector<double> e11, e22, e12_fast, e12_slow;
  for (int m = 0; m < M; ++m) {
    RngStream rng(209, static_cast<std::uint64_t>(m));
    const SamplePath path = path_sample(spec, T, N, rng);
    const Estimate est = mle_b_sym(path_functionals(path, opts), 3.5);
    const Mat err = est.b_hat - b;
    e11.push_back(std::exp(0.1 * T) * err(0, 0));
    e22.push_back(std::exp(0.005 * T) * err(1, 1));
    e12_fast.push_back(std::exp(0.1 * T) * err(0, 1));
    e12_slow.push_back(std::exp(0.005 * T) * err(0, 1));
  }
  const double m11 = median_abs(e11), m22 = median_abs(e22);
  const double f12 = median_abs(e12_fast), s12 = median_abs(e12_slow);
  detail = "median scaled |err|: (1,1) " + fmt(m11) + ", (2,2) " + fmt(m22) + ", (1,2) fast " +
           fmt(f12) + ", (1,2) slow " + fmt(s12);
  const bool diag_ok = m11 >= 1e-3 && m11 <= 1e3 && iqr(e11) > 1e-6 && m22 >= 1e-3 &&
                       m22 <= 1e3 && iqr(e22) > 1e-6;
  const bool off_ok = f12 >= 1e-3 && f12 <= 1e3 && iqr(e12_fast) > 1e-6 && s12 < 1e-2;
  return diag_ok && off_ok;
}

// 10. Full pipeline over a step grid: alpha MSEs near their reference values,
//     the known-vs-estimated b11 gap closes monotonically, and the a-error
//     decays with a log-log slope near -1/2.
bool crit_pipeline_mse(std::string& detail) {
  Mat x(2, 2), b(2, 2), a(2, 2);
  x << 0.8, 0.5, 0.5, 1.0;
  b << -1.0, 0.2, 2.0, -2.0;
  a << 1.0, 1.0, 0.0, 2.0;
  ExperimentConfig base;
  base.spec = WishartSpec(x, 4.5, b, a);
  base.T = 100.0;
  base.M = 500;
  base.seed = 210;
  const ExperimentReport r = mse_table(base, {100, 500, 1000, 5000});

  auto row_at = [&](long n) -> const MseRow* {
    for (const MseRow& row : r.mse_rows)
      if (row.N == n) return &row;
    return nullptr;
  };
  const MseRow* r100 = row_at(100);
  const MseRow* r1000 = row_at(1000);
  const MseRow* r5000 = row_at(5000);
  if (!r100 || !r1000 || !r5000 || !r.a_fit.valid) {
    detail = "missing grid rows";
    return false;
  }
  const double a1 = r1000->mse_alpha_est;
  const double a5 = r5000->mse_alpha_est;
  const double g100 = r100->mse_b_est(0, 0) - r100->mse_b_known(0, 0);
  const double g1000 = r1000->mse_b_est(0, 0) - r1000->mse_b_known(0, 0);
  const double g5000 = r5000->mse_b_est(0, 0) - r5000->mse_b_known(0, 0);

  detail = "MSE(alpha) " + fmt(a1) + " @N=1000 (ref 0.0410), " + fmt(a5) +
           " @N=5000 (ref 0.0234); b11 gap " + fmt(g100) + " > " + fmt(g1000) + " > " +
           fmt(g5000) + "; a-error slope " + fmt(r.a_fit.slope);
  const bool alpha_ok = a1 >= 0.0205 && a1 <= 0.0820 && a5 >= 0.0117 && a5 <= 0.0468;
  const bool gap_ok = g100 > 0.0 && g100 > g1000 && g1000 > g5000;
  const bool slope_ok = r.a_fit.slope >= -0.75 && r.a_fit.slope <= -0.40;
  return r.failures == 0 && alpha_ok && gap_ok && slope_ok;
}

// 11. Zero drift inverse-trace growth: Qinv_T / (d log T) drifts down toward
//     1/(alpha - d - 1) (slow logarithmic trend, checked loosely).
bool crit_qinv_trend(std::string& detail) {
  const WishartSpec spec =
      WishartSpec::canonical(Mat::Identity(2, 2), 4.5, Mat::Zero(2, 2));
  const double horizons[] = {100.0, 1000.0, 10000.0};
  const double dt = 0.1;
  const int reps = 200;

  StatsOptions opts;
  opts.qcov = false;
  opts.general_ops = false;

  double means[3] = {0.0, 0.0, 0.0};
  for (int m = 0; m < reps; ++m) {
    RngStream rng(211, static_cast<std::uint64_t>(m));
    const SamplePath full = path_sample(spec, horizons[2], static_cast<int>(horizons[2] / dt), rng);
    for (int h = 0; h < 3; ++h) {
      const int n = static_cast<int>(horizons[h] / dt);
      SamplePath sub;
      sub.spec = spec;
      sub.times = full.times.head(n + 1);
      sub.states.assign(full.states.begin(), full.states.begin() + n + 1);
      const PathStats stats = path_functionals(sub, opts);
      means[h] += stats.qinv() / (2.0 * std::log(horizons[h]));
    }
  }
  for (double& v : means) v /= reps;
  const double target = 1.0 / (4.5 - 2.0 - 1.0);
  const double gap = std::abs(means[2] - target) / target;
  detail = "mean ratios " + fmt(means[0]) + ", " + fmt(means[1]) + ", " + fmt(means[2]) +
           " (target " + fmt(target) + ", final rel gap " + fmt(gap) + ")";
  return means[0] > means[1] && means[1] > means[2] && gap < 0.25;
}

// 12. The quadratic expansion of the log-likelihood in (b, alpha) is exact.
bool crit_lan_identity(std::string& detail) {
  double worst = 0.0;
  for (int p = 0; p < 10; ++p) {
    RngStream rng(212, static_cast<std::uint64_t>(p));
    const Mat x = random_spd(2, 0.4, rng);
    const Mat b = random_sym(2, 0.4, rng) - (0.9 + 0.4 * rng.uniform()) * Mat::Identity(2, 2);
    const double alpha = 4.0 + rng.uniform();
    const WishartSpec spec = WishartSpec::canonical(x, alpha, b);
    const SamplePath path = path_sample(spec, 2.0, 250, rng);
    StatsOptions opts;
    opts.qcov = false;
    opts.general_ops = false;
    const PathStats s = path_functionals(path, opts);
    for (int j = 0; j < 5; ++j) {
      const double u1 = rng.normal();
      const Mat u2 = random_sym(2, 0.5, rng);
      const double d1 = 0.1 + 0.4 * rng.uniform();
      const double d2 = 0.1 + 0.4 * rng.uniform();
      const auto [lambda, gamma] = lan_statistics(s, b, alpha, u1, u2, d1, d2);
      const double shift =
          loglik_sym(s, b + d2 * u2, alpha + d1 * u1, alpha) - loglik_sym(s, b, alpha, alpha);
      worst = std::max(worst,
                       std::abs(shift - (lambda - 0.5 * gamma)) / std::max(1.0, std::abs(shift)));
    }
  }
  detail = "max rel defect " + fmt(worst) + " over 50 evaluations";
  return worst <= 1e-8;
}

}  // namespace

int main(int argc, char** argv) {
  using Fn = bool (*)(std::string&);
  const std::vector<std::pair<const char*, Fn>> criteria = {
      {"operator identities", crit_operator_identities},
      {"transform vs oracle", crit_transform_vs_oracle},
      {"martingale identity", crit_girsanov},
      {"transition kernel law", crit_kernel_exactness},
      {"stationary sampler", crit_stationary_sampler},
      {"ergodic joint limit", crit_ergodic_clt},
      {"expanding drift KS", crit_expanding_ks},
      {"zero drift probes", crit_zero_drift_probes},
      {"diagonal drift rates", crit_diagonal_rates},
      {"pipeline MSE grid", crit_pipeline_mse},
      {"inverse-trace trend", crit_qinv_trend},
      {"likelihood expansion", crit_lan_identity},
  };

  std::vector<int> todo;
  for (int i = 1; i < argc; ++i) todo.push_back(std::atoi(argv[i]));
  if (todo.empty())
    for (int n = 1; n <= static_cast<int>(criteria.size()); ++n) todo.push_back(n);

  bool all_ok = true;
  for (int n : todo) {
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::printf("criterion %d: FAIL (no such criterion)\n", n);
      all_ok = false;
      continue;
    }
    std::string detail;
    bool ok = false;
    try {
      ok = criteria[n - 1].second(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
      ok = false;
    }
    std::printf("criterion %d: %s (%s: %s)\n", n, ok ? "PASS" : "FAIL", criteria[n - 1].first,
                detail.c_str());
    std::fflush(stdout);
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
