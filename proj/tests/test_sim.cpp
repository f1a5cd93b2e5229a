#include <doctest.h>

#include <cmath>
#include <wishart/laplace.hpp>
#include <wishart/linops.hpp>
#include <wishart/sim.hpp>

#include "util.hpp"

using namespace wishart;
using testutil::random_spd;

namespace {

double mc_mean_exp(const std::vector<double>& exponents) {
  double s = 0.0;
  for (double e : exponents) s += std::exp(e);
  return s / static_cast<double>(exponents.size());
}

double mc_se_exp(const std::vector<double>& exponents, double mean) {
  double s = 0.0;
  for (double e : exponents) {
    const double d = std::exp(e) - mean;
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(exponents.size() - 1) /
                   static_cast<double>(exponents.size()));
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("bartlett wishart moments") {
  RngStream rng(31, 0);
  const int d = 2;
  const double degree = 5.0;
  const int m = 40000;
  Mat mean = Mat::Zero(d, d);
  for (int i = 0; i < m; ++i) {
    const Mat w = bartlett_wishart(degree, d, rng);
    CHECK(is_symmetric(w));
    mean += w;
  }
  mean /= m;
  // Var(W_ii) = 2 degree, Var(W_ij) = degree; allow five standard errors
  CHECK(std::abs(mean(0, 0) - degree) <= 5.0 * std::sqrt(2.0 * degree / m));
  CHECK(std::abs(mean(1, 1) - degree) <= 5.0 * std::sqrt(2.0 * degree / m));
  CHECK(std::abs(mean(0, 1)) <= 5.0 * std::sqrt(degree / m));

  CHECK_THROWS_AS((void)bartlett_wishart(0.8, 2, rng), InvalidDegree);
}

TEST_CASE("transition kernel matches the transform") {
  Mat x(2, 2), b(2, 2);
  x << 0.8, 0.5, 0.5, 1.0;
  b << -1.0, 0.0, 0.0, -1.0;
  const WishartSpec spec = WishartSpec::canonical(x, 4.5, b);
  const double dt = 0.5;
  const TransitionKernel kernel(spec, dt);

  std::vector<Mat> probes;
  probes.push_back(0.4 * Mat::Identity(2, 2));
  probes.push_back((Mat(2, 2) << 0.3, 0.1, 0.1, 0.2).finished());

  RngStream rng(32, 0);
  const int m = 30000;
  std::vector<std::vector<double>> expo(probes.size());
  for (int i = 0; i < m; ++i) {
    const Mat xt = kernel.sample(x, rng);
    for (size_t p = 0; p < probes.size(); ++p)
      expo[p].push_back(-0.5 * (probes[p] * xt).trace());
  }
  for (size_t p = 0; p < probes.size(); ++p) {
    const double mean = mc_mean_exp(expo[p]);
    const double se = mc_se_exp(expo[p], mean);
    const double want = joint_laplace(spec, Mat::Zero(2, 2), probes[p], dt);
    CHECK(std::abs(mean - want) <= 5.0 * se);
  }
}

TEST_CASE("rank condition triggers the euler fallback") {
  RngStream rng(33, 0);
  const Mat x = random_spd(2, 0.5, rng);
  const WishartSpec spec = WishartSpec::canonical(x, 1.5, -Mat::Identity(2, 2));
  const TransitionKernel kernel(spec, 0.1);
  CHECK_THROWS_AS((void)kernel.sample(x, rng), RankConditionViolated);

  const SamplePath path = path_sample(spec, 1.0, 10, rng);
  CHECK(path.euler_fallbacks == 10);

  const WishartSpec ok = WishartSpec::canonical(x, 4.5, -Mat::Identity(2, 2));
  CHECK(path_sample(ok, 1.0, 10, rng).euler_fallbacks == 0);
}

TEST_CASE("paths start at x on the uniform grid") {
  Mat x(2, 2), b(2, 2), a(2, 2);
  x << 1.0, 0.4, 0.4, 1.2;
  b << -1.0, 0.2, 2.0, -2.0;
  a << 1.0, 1.0, 0.0, 2.0;
  const WishartSpec spec(x, 4.5, b, a);
  REQUIRE(spec.is_transformable());

  RngStream rng(34, 0);
  const int n = 200;
  const SamplePath path = path_sample(spec, 2.0, n, rng);
  CHECK(path.steps() == n);
  CHECK(path.euler_fallbacks == 0);
  CHECK((path.states.front() - x).cwiseAbs().maxCoeff() <= 1e-12);
  for (int i = 0; i <= n; ++i) {
    CHECK(std::abs(path.times(i) - 2.0 * i / n) <= 1e-12);
    CHECK(is_symmetric(path.states[i]));
  }
  CHECK(is_posdef(path.states.back()));
}

TEST_CASE("stationary sampler matches its mean and transform") {
  Mat b(2, 2), v(2, 2);
  b << -1.0, 0.3, 0.3, -1.2;
  v << 0.5, 0.2, 0.2, 0.6;
  const double alpha = 4.5;
  const Mat r_inf = -0.5 * alpha * b.inverse();

  RngStream rng(35, 0);
  const int m = 30000;
  Mat mean = Mat::Zero(2, 2);
  std::vector<double> expo;
  for (int i = 0; i < m; ++i) {
    const Mat xs = stationary_sample(alpha, b, rng);
    mean += xs;
    expo.push_back(-(v * xs).trace());
  }
  mean /= m;
  CHECK((mean - r_inf).cwiseAbs().maxCoeff() <= 0.1);
  const double mc = mc_mean_exp(expo);
  CHECK(std::abs(mc - stationary_laplace(alpha, b, v)) <= 5.0 * mc_se_exp(expo, mc));
}

TEST_CASE("stationary sampler covers non symmetric drifts") {
  Mat b(2, 2), v(2, 2);
  b << -1.0, 0.5, -0.1, -0.7;
  v << 0.3, 0.1, 0.1, 0.4;
  RngStream rng(36, 0);
  const int m = 30000;
  std::vector<double> expo;
  for (int i = 0; i < m; ++i)
    expo.push_back(-(v * stationary_sample(4.5, b, rng)).trace());
  const double mc = mc_mean_exp(expo);
  CHECK(std::abs(mc - stationary_laplace(4.5, b, v)) <= 5.0 * mc_se_exp(expo, mc));

  CHECK_THROWS_AS((void)stationary_sample(4.5, (0.2 * Mat::Identity(2, 2)).eval(), rng),
                  NotErgodic);
}

TEST_CASE("zero drift unit horizon pair matches the transform") {
  const double alpha = 4.5;
  const int d = 2;
  const WishartSpec spec = WishartSpec::canonical(Mat::Zero(d, d), alpha, Mat::Zero(d, d));
  Mat w(2, 2), v(2, 2);
  w << 0.5, 0.2, 0.2, 0.8;
  v << 0.4, 0.1, 0.1, 0.3;

  RngStream rng(37, 0);
  const int m = 20000;
  Mat mean_x = Mat::Zero(d, d), mean_r = Mat::Zero(d, d);
  std::vector<double> expo;
  for (int i = 0; i < m; ++i) {
    const auto [xt, rt] = wishart0_joint_sample(alpha, d, 64, rng);
    mean_x += xt;
    mean_r += rt;
    expo.push_back(-0.5 * (w * xt).trace() - 0.5 * (v * rt).trace());
  }
  mean_x /= m;
  mean_r /= m;
  // X_1 is Wishart(alpha, I), R_1 integrates the linear-in-time mean
  CHECK((mean_x - alpha * Mat::Identity(d, d)).cwiseAbs().maxCoeff() <= 0.12);
  CHECK((mean_r - 0.5 * alpha * Mat::Identity(d, d)).cwiseAbs().maxCoeff() <= 0.08);
  const double mc = mc_mean_exp(expo);
  const double want = joint_laplace(spec, v, w, 1.0);
  CHECK(std::abs(mc - want) <= 5.0 * mc_se_exp(expo, mc));
}

TEST_CASE("hitting time transform") {
  RngStream rng(38, 0);
  const double level = 1.1, s = 0.8;
  const int m = 40000;
  std::vector<double> expo;
  for (int i = 0; i < m; ++i) expo.push_back(-s * tau_sample(level, rng));
  const double mc = mc_mean_exp(expo);
  const double want = std::exp(-level * std::sqrt(2.0 * s));
  CHECK(std::abs(mc - want) <= 5.0 * mc_se_exp(expo, mc));
}

TEST_CASE("matrix gaussian covariance structure") {
  Mat c(2, 2);
  c << 1.0, 0.3, 0.3, 0.7;
  RngStream rng(39, 0);
  const int m = 40000;
  double v11 = 0.0, v12 = 0.0, c1112 = 0.0, c1122 = 0.0;
  for (int i = 0; i < m; ++i) {
    const Mat g = matrix_gaussian_cov(c, rng);
    CHECK(is_symmetric(g));
    v11 += g(0, 0) * g(0, 0);
    v12 += g(0, 1) * g(0, 1);
    c1112 += g(0, 0) * g(0, 1);
    c1122 += g(0, 0) * g(1, 1);
  }
  // Cov(G_ij, G_kl) = d_ik c_jl + d_il c_jk + d_jk c_il + d_jl c_ik
  CHECK(std::abs(v11 / m - 4.0 * c(0, 0)) <= 0.15);
  CHECK(std::abs(v12 / m - (c(0, 0) + c(1, 1))) <= 0.08);
  CHECK(std::abs(c1112 / m - 2.0 * c(0, 1)) <= 0.08);
  CHECK(std::abs(c1122 / m - 0.0) <= 0.15);
}

TEST_CASE("streams reproduce and separate") {
  const WishartSpec spec = WishartSpec::canonical(
      (Mat(2, 2) << 0.8, 0.5, 0.5, 1.0).finished(), 4.5, -Mat::Identity(2, 2));
  RngStream r1(99, 7), r2(99, 7), r3(99, 8);
  const SamplePath p1 = path_sample(spec, 1.0, 50, r1);
  const SamplePath p2 = path_sample(spec, 1.0, 50, r2);
  const SamplePath p3 = path_sample(spec, 1.0, 50, r3);
  double dmax12 = 0.0, dmax13 = 0.0;
  for (int i = 0; i <= 50; ++i) {
    dmax12 = std::max(dmax12, (p1.states[i] - p2.states[i]).cwiseAbs().maxCoeff());
    dmax13 = std::max(dmax13, (p1.states[i] - p3.states[i]).cwiseAbs().maxCoeff());
  }
  CHECK(dmax12 == 0.0);
  CHECK(dmax13 > 1e-6);
}

}  // TEST_SUITE
