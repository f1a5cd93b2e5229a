#pragma once

#include <Eigen/Dense>
#include <cassert>
#include <cmath>
#include <unsupported/Eigen/KroneckerProduct>

#include "wishart/errors.hpp"
#include "wishart/types.hpp"

namespace wishart {

template <class D>
using PlainMat = Eigen::Matrix<typename D::Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kPsdTolFactor = 1e-10;   // eigenvalue tolerance, relative to spectral norm
inline constexpr double kSingularGuard = 1e-12;  // |1 - a tr X^-1| rejection threshold
inline constexpr double kCondLimit = 1e12;

inline Eigen::SelfAdjointEigenSolver<Mat> sym_eig(const Mat& X) {
  Eigen::SelfAdjointEigenSolver<Mat> es;
  if (X.rows() == 2 || X.rows() == 3)
    es.computeDirect(X);
  else
    es.compute(X);
  return es;
}

inline double spectral_norm_sym(const Mat& X) {
  return sym_eig(X).eigenvalues().cwiseAbs().maxCoeff();
}

inline bool is_psd(const Mat& X, double tol_factor = kPsdTolFactor) {
  auto ev = sym_eig(X).eigenvalues();
  return ev.minCoeff() >= -tol_factor * ev.cwiseAbs().maxCoeff();
}

inline bool is_posdef(const Mat& X, double tol_factor = kPsdTolFactor) {
  auto ev = sym_eig(X).eigenvalues();
  return ev.minCoeff() > tol_factor * ev.cwiseAbs().maxCoeff() && ev.minCoeff() > 0.0;
}

// L_{X,a}(Y) = XY + YX - 2a tr(Y) I
template <class DX, class DY>
PlainMat<DX> lop_apply(const Eigen::MatrixBase<DX>& X, typename DX::Scalar a,
                       const Eigen::MatrixBase<DY>& Y) {
  if (X.rows() != X.cols() || Y.rows() != Y.cols() || X.rows() != Y.rows())
    throw DimensionMismatch("lop_apply: shapes");
  PlainMat<DX> r = X * Y + Y * X;
  r.diagonal().array() -= typename DX::Scalar(2) * a * Y.trace();
  return r;
}

// Eigendecomposition of a fixed positive definite X, reused across many
// L_{X,a} solves and bar-L applications.
class LopSolver {
 public:
  explicit LopSolver(Mat X, bool clamp_floor = false) : x_(std::move(X)) {
    auto es = sym_eig(x_);
    o_ = es.eigenvectors();
    lam_ = es.eigenvalues();
    const double lmax = lam_.cwiseAbs().maxCoeff();
    posdef_ = lam_.minCoeff() > kPsdTolFactor * lmax && lam_.minCoeff() > 0.0;
    if (clamp_floor) {
      lam_ = lam_.cwiseMax(kSingularGuard * std::max(lmax, 1e-300));
      clamped_ = true;
    }
    tr_inv_ = lam_.cwiseInverse().sum();
  }

  // Strict positive definiteness of the original matrix (before any clamping).
  bool posdef() const { return posdef_; }
  void require_posdef() const {
    if (!posdef_ && !clamped_) throw NotPositiveDefinite("LopSolver: X not positive definite");
  }
  const Mat& matrix() const { return x_; }
  const Vec& eigenvalues() const { return lam_; }
  const Mat& eigenvectors() const { return o_; }
  double tr_inverse() const { return tr_inv_; }
  Mat inverse() const { return o_ * lam_.cwiseInverse().asDiagonal() * o_.transpose(); }

  // c = L_{X,a}^{-1}(Y) for symmetric Y: tr(c) from the trace identity, then the
  // shifted right-hand side solved in the eigenbasis of X.
  Mat solve(const Mat& Y, double a = 0.0) const {
    require_posdef();
    Mat z = o_.transpose() * Y * o_;
    if (a != 0.0) {
      const double denom = 1.0 - a * tr_inv_;
      if (std::abs(denom) < kSingularGuard)
        throw SingularOperator("L_{X,a}: a tr(X^-1) = 1 within tolerance");
      const double trc = (z.diagonal().array() / lam_.array()).sum() / (2.0 * denom);
      z.diagonal().array() += 2.0 * a * trc;
    }
    const int d = static_cast<int>(lam_.size());
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) z(i, j) /= lam_(i) + lam_(j);
    return o_ * z * o_.transpose();
  }

  // bar-L_X(Y) = L_X^{-1}(YX + XY^T) X
  Mat bar_apply(const Mat& Y) const { return solve(Y * x_ + x_ * Y.transpose()) * x_; }

 private:
  Mat x_, o_;
  Vec lam_;
  double tr_inv_ = 0.0;
  bool posdef_ = false;
  bool clamped_ = false;
};

inline Mat lop_invert(const Mat& X, double a, const Mat& Y) { return LopSolver(X).solve(Y, a); }

inline Mat barlop_apply(const Mat& X, const Mat& Y) { return LopSolver(X).bar_apply(Y); }

// d^2 x d^2 matrix of a linear map on M_d in the row-major e_ij basis.
template <class F>
Mat operator_to_matrix(F&& f, int d) {
  Mat A(d * d, d * d);
  Mat E = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      E(i, j) = 1.0;
      A.col(i * d + j) = vec_rm(f(E));
      E(i, j) = 0.0;
    }
#ifndef NDEBUG
  {
    Mat u(d, d), v(d, d);
    for (int k = 0; k < d * d; ++k) {
      u(k / d, k % d) = std::sin(1.0 + k);
      v(k / d, k % d) = std::cos(2.0 + 3.0 * k);
    }
    Mat lhs = f(0.7 * u + 1.3 * v);
    Mat rhs = 0.7 * f(u) + 1.3 * f(v);
    assert((lhs - rhs).cwiseAbs().maxCoeff() <=
               1e-8 * std::max(1.0, rhs.cwiseAbs().maxCoeff()) &&
           "operator_to_matrix: map is not linear");
  }
#endif
  return A;
}

inline Mat spd_sqrt(const Mat& X) {
  auto es = sym_eig(X);
  Vec lam = es.eigenvalues();
  const double tol = kPsdTolFactor * lam.cwiseAbs().maxCoeff();
  if (lam.minCoeff() < -tol) throw NotPsd("spd_sqrt: negative eigenvalue");
  lam = lam.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

template <class F>
Mat sym_matfun(const Mat& X, F&& f) {
  auto es = sym_eig(X);
  Vec lam = es.eigenvalues();
  for (int i = 0; i < lam.size(); ++i) lam(i) = f(lam(i));
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

enum class MatFun { Exp, Cosh, Sinh, Sinhc };

inline double sinhc(double z) { return z == 0.0 ? 1.0 : std::sinh(z) / z; }

inline Mat sym_matfun(const Mat& X, MatFun tag) {
  switch (tag) {
    case MatFun::Exp:
      return sym_matfun(X, [](double z) { return std::exp(z); });
    case MatFun::Cosh:
      return sym_matfun(X, [](double z) { return std::cosh(z); });
    case MatFun::Sinh:
      return sym_matfun(X, [](double z) { return std::sinh(z); });
    case MatFun::Sinhc:
      return sym_matfun(X, [](double z) { return sinhc(z); });
  }
  throw Error("sym_matfun: bad tag");
}

// R with bR + Rb^T = -C, via the d^2 x d^2 vectorized system.
inline Mat lyapunov_solve(const Mat& b, const Mat& C) {
  if (b.rows() != b.cols() || C.rows() != C.cols() || b.rows() != C.rows())
    throw DimensionMismatch("lyapunov_solve: shapes");
  const int d = static_cast<int>(b.rows());
  const Mat id = Mat::Identity(d, d);
  // row-major vec: vec(bR) = (b (x) I) vec(R), vec(R b^T) = (I (x) b) vec(R)
  Mat A = Eigen::kroneckerProduct(b, id) + Eigen::kroneckerProduct(id, b);
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0) || smax / smin > kCondLimit)
    throw SingularLyapunov("lyapunov_solve: vectorized system ill-conditioned");
  Mat R = sympart(unvec_rm(svd.solve(vec_rm(-C)), d));
  const double resid = (b * R + R * b.transpose() + C).cwiseAbs().maxCoeff();
  if (resid > 1e-10 * std::max(1.0, C.cwiseAbs().maxCoeff()))
    throw SingularLyapunov("lyapunov_solve: residual too large");
  return R;
}

}  // namespace wishart
