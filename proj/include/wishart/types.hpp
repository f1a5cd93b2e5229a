#pragma once

#include <Eigen/Dense>

#include "wishart/errors.hpp"

namespace wishart {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Row-major vectorization over the full d*d basis e_ij, index k = i*d + j.
inline Vec vec_rm(const Mat& m) {
  Vec v(m.size());
  const int d = static_cast<int>(m.rows());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < static_cast<int>(m.cols()); ++j) v(i * m.cols() + j) = m(i, j);
  return v;
}

inline Mat unvec_rm(const Vec& v, int rows, int cols) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
  return m;
}

inline Mat unvec_rm(const Vec& v, int d) { return unvec_rm(v, d, d); }

template <class D>
auto sympart(const Eigen::MatrixBase<D>& m) {
  return ((m + m.transpose()) * typename D::Scalar(0.5)).eval();
}

inline bool is_symmetric(const Mat& m, double tol = 1e-10) {
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

// Process parameters (d, x, alpha, b, a) of dX = [alpha*a^T a + b X + X b^T]dt + sqrt(X)dW a + a^T dW^T sqrt(X).
struct WishartSpec {
  int d = 0;
  Mat x;
  double alpha = 0.0;
  Mat b;
  Mat a;

  WishartSpec() = default;
  WishartSpec(Mat x0, double alpha0, Mat b0, Mat a0)
      : d(static_cast<int>(x0.rows())),
        x(std::move(x0)),
        alpha(alpha0),
        b(std::move(b0)),
        a(std::move(a0)) {}

  static WishartSpec canonical(Mat x0, double alpha0, Mat b0) {
    const int dim = static_cast<int>(x0.rows());
    return WishartSpec(std::move(x0), alpha0, std::move(b0), Mat::Identity(dim, dim));
  }

  void validate() const {
    if (x.rows() != d || x.cols() != d || b.rows() != d || b.cols() != d || a.rows() != d ||
        a.cols() != d)
      throw DimensionMismatch("WishartSpec: inconsistent matrix dimensions");
    if (alpha < d - 1 - 1e-12) throw InvalidDegree("WishartSpec: alpha < d-1");
  }

  bool is_canonical(double tol = 1e-12) const {
    return (a - Mat::Identity(d, d)).cwiseAbs().maxCoeff() <= tol && is_symmetric(b, tol);
  }

  // b a^T a = a^T a b^T with a invertible, i.e. (a^T)^{-1} b a^T symmetric.
  bool is_transformable(double tol = 1e-9) const {
    Eigen::FullPivLU<Mat> lu(a);
    if (!lu.isInvertible()) return false;
    const Mat lhs = b * a.transpose() * a;
    const Mat rhs = a.transpose() * a * b.transpose();
    const double scale = std::max(1.0, lhs.cwiseAbs().maxCoeff());
    return (lhs - rhs).cwiseAbs().maxCoeff() <= tol * scale;
  }

  // Equivalent canonical process for Y = (a^T)^{-1} X a^{-1}.
  WishartSpec to_canonical() const {
    if (!is_transformable()) throw NotTransformable("WishartSpec: b a^T a != a^T a b^T");
    const Mat at_inv = a.transpose().inverse();
    const Mat a_inv = a.inverse();
    return canonical(sympart(at_inv * x * a_inv), alpha, sympart(at_inv * b * a.transpose()));
  }
};

}  // namespace wishart
