#include "wishart/sim.hpp"

#include <cmath>

#include "wishart/linops.hpp"

namespace wishart {

namespace {

// (e^{2 lambda t} - 1) / (2 lambda), continuous limit t at lambda = 0.
double q_scalar(double lam, double t) {
  const double z = 2.0 * lam * t;
  if (std::abs(z) < 1e-8) return t * (1.0 + 0.5 * z + z * z / 6.0);
  return std::expm1(z) / (2.0 * lam);
}

}  // namespace

TransitionKernel::TransitionKernel(const WishartSpec& spec, double dt)
    : d_(spec.d), alpha_(spec.alpha), dt_(dt) {
  spec.validate();
  if (!spec.is_canonical()) throw ConfigError("TransitionKernel: spec must be canonical");
  if (!(dt > 0.0)) throw ConfigError("TransitionKernel: dt must be positive");
  auto es = sym_eig(spec.b);
  const Mat& o = es.eigenvectors();
  Vec e(d_), q(d_);
  for (int i = 0; i < d_; ++i) {
    e(i) = std::exp(es.eigenvalues()(i) * dt);
    q(i) = q_scalar(es.eigenvalues()(i), dt);
  }
  ebt_ = o * e.asDiagonal() * o.transpose();
  q_sqrt_ = o * q.cwiseSqrt().asDiagonal() * o.transpose();
  q_inv_sqrt_ = o * q.cwiseSqrt().cwiseInverse().asDiagonal() * o.transpose();
}

Mat bartlett_wishart(double degree, int d, RngStream& rng) {
  if (degree < d - 1 - 1e-9) throw InvalidDegree("bartlett_wishart: degree < d-1");
  Mat l = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < i; ++j) l(i, j) = rng.normal();
    const double shape = std::max(degree - i, 0.0);
    l(i, i) = std::sqrt(rng.chi_square(shape));
  }
  return l * l.transpose();
}

Mat TransitionKernel::sample(const Mat& x0, RngStream& rng) const {
  const Mat m = ebt_ * x0 * ebt_;
  const Mat lam = sympart(q_inv_sqrt_ * m * q_inv_sqrt_);
  auto es = sym_eig(lam);
  const Vec& ev = es.eigenvalues();
  const double lmax = ev.cwiseAbs().maxCoeff();
  const double tol = kPsdTolFactor * std::max(lmax, 1e-300);
  int p = 0;
  for (int i = 0; i < d_; ++i)
    if (ev(i) > tol) ++p;
  if (alpha_ < d_ - 1 + p - 1e-9)
    throw RankConditionViolated("transition_sample: alpha < d - 1 + rank(x0)");

  Mat gm(d_, p);  // columns: sqrt(eigenvalue) * eigenvector, plus standard normals
  int col = 0;
  for (int i = 0; i < d_; ++i) {
    if (ev(i) <= tol) continue;
    gm.col(col) = std::sqrt(ev(i)) * es.eigenvectors().col(i);
    ++col;
  }
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < d_; ++i) gm(i, j) += rng.normal();
  Mat xt = gm * gm.transpose() + bartlett_wishart(alpha_ - p, d_, rng);
  return sympart(q_sqrt_ * xt * q_sqrt_);
}

Mat transition_sample(const WishartSpec& spec, const Mat& x0, double dt, RngStream& rng) {
  return TransitionKernel(spec, dt).sample(x0, rng);
}

Mat euler_step(const WishartSpec& spec, const Mat& x0, double dt, RngStream& rng) {
  if (!(dt > 0.0)) throw ConfigError("euler_step: dt must be positive");
  const int d = spec.d;
  auto es = sym_eig(sympart(x0));
  const Mat sqx =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
      es.eigenvectors().transpose();
  const Mat g = std::sqrt(dt) * matrix_gaussian_iid(d, rng);
  const Mat diff = sqx * g * spec.a;
  Mat next = x0 +
             (spec.alpha * spec.a.transpose() * spec.a + spec.b * x0 + x0 * spec.b.transpose()) * dt +
             diff + diff.transpose();
  auto es2 = sym_eig(sympart(next));
  return es2.eigenvectors() * es2.eigenvalues().cwiseMax(0.0).asDiagonal() *
         es2.eigenvectors().transpose();
}

SamplePath path_sample(const WishartSpec& spec, double T, int N, RngStream& rng) {
  spec.validate();
  if (!(T > 0.0) || N < 1) throw ConfigError("path_sample: need T > 0 and N >= 1");

  if (!spec.is_canonical()) {
    if (!spec.is_transformable()) throw NotTransformable("path_sample: spec");
    const WishartSpec canon = spec.to_canonical();
    SamplePath ypath = path_sample(canon, T, N, rng);
    SamplePath out;
    out.spec = spec;
    out.times = ypath.times;
    out.euler_fallbacks = ypath.euler_fallbacks;
    out.states.reserve(ypath.states.size());
    for (const auto& y : ypath.states)
      out.states.push_back(sympart(spec.a.transpose() * y * spec.a));
    out.states[0] = spec.x;
    return out;
  }

  SamplePath path;
  path.spec = spec;
  path.times = Vec(N + 1);
  for (int i = 0; i <= N; ++i) path.times(i) = T * static_cast<double>(i) / N;
  path.states.reserve(N + 1);
  path.states.push_back(spec.x);
  const TransitionKernel kernel(spec, T / N);
  for (int i = 0; i < N; ++i) {
    const Mat& cur = path.states.back();
    try {
      path.states.push_back(kernel.sample(cur, rng));
    } catch (const RankConditionViolated&) {
      path.states.push_back(euler_step(spec, cur, T / N, rng));
      ++path.euler_fallbacks;
    }
  }
  return path;
}

Mat stationary_sample(double alpha, const Mat& b, RngStream& rng) {
  if (!is_posdef((-sympart(b)).eval()))
    throw NotErgodic("stationary_sample: b + b^T not negative definite");
  const int d = static_cast<int>(b.rows());
  const Mat sigma =
      is_symmetric(b) ? (-0.5 * b.inverse()).eval() : lyapunov_solve(b, Mat::Identity(d, d));
  const Mat c = spd_sqrt(sympart(sigma));
  return sympart(c * bartlett_wishart(alpha, d, rng) * c);
}

std::pair<Mat, Mat> wishart0_joint_sample(double alpha, int d, int n_inner, RngStream& rng) {
  if (n_inner < 1) throw ConfigError("wishart0_joint_sample: n_inner >= 1");
  const WishartSpec spec = WishartSpec::canonical(Mat::Zero(d, d), alpha, Mat::Zero(d, d));
  const SamplePath path = path_sample(spec, 1.0, n_inner, rng);
  Mat r = Mat::Zero(d, d);
  const double h = 1.0 / n_inner;
  for (int i = 0; i <= n_inner; ++i)
    r += ((i == 0 || i == n_inner) ? 0.5 * h : h) * path.states[i];
  return {path.states.back(), sympart(r)};
}

double tau_sample(double a, RngStream& rng) {
  if (!(a > 0.0)) throw Error("tau_sample: level must be positive");
  double z = rng.normal();
  while (z == 0.0) z = rng.normal();
  return a * a / (z * z);
}

Mat matrix_gaussian_iid(int d, RngStream& rng) {
  Mat g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  return g;
}

Mat matrix_gaussian_cov(const Mat& C, RngStream& rng) {
  const Mat root = spd_sqrt(sympart(C));
  const Mat g = matrix_gaussian_iid(static_cast<int>(C.rows()), rng);
  return root * g + g.transpose() * root;
}

}  // namespace wishart
