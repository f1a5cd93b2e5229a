#pragma once

#include <optional>

#include "wishart/linops.hpp"
#include "wishart/types.hpp"

namespace wishart {

// Matrix solutions of V'' = vtilde V on which the joint transform of (X_t, R_t) is built:
// V(t)      = (sum t^{2k+1} vtilde^k/(2k+1)!) wtilde + sum t^{2k} vtilde^k/(2k)!
// Vprime(t) = (sum t^{2k} vtilde^k/(2k)!) wtilde + vtilde sum t^{2k+1} vtilde^k/(2k+1)!
struct VPair {
  Mat V;
  Mat Vprime;
  Mat vtilde;
  Mat wtilde;
};

enum class VRoute { Spectral, Series };

VPair v_matrices(const Mat& v, const Mat& w, const Mat& b, double t,
                 VRoute route = VRoute::Spectral);

// Finiteness certificate: a symmetric m with w/2 + m PSD and
// v/2 - b^T m - m b - 2 m a^T a m PSD.
struct DomainCertificate {
  Mat m;
  int candidate;  // 0: m=0, 1: m=-w/2, 2: m=-(a^T a)^{-1} b / 2, 3: square-root shift
};

std::optional<DomainCertificate> domain_check(const Mat& v, const Mat& w, const Mat& b,
                                              const Mat& a);

// E[exp(-1/2 tr(w X_t) - 1/2 tr(v R_t))] for a canonical spec (a = I, b symmetric).
double joint_laplace(const WishartSpec& spec, const Mat& v, const Mat& w, double t);

// Same transform for a transformable spec (b a^T a = a^T a b^T, a invertible).
double joint_laplace_general(const WishartSpec& spec, const Mat& v, const Mat& w, double t);

// Independent check: integrates the matrix Riccati system
//   gamma' = gamma b + b gamma + 2 gamma^2 + delta, gamma(0) = -w/2, delta = -v/2,
//   beta' = alpha tr(gamma)
// by RK4 with step halving, returns exp(beta(t) + tr(gamma(t) x)).
double riccati_oracle(const WishartSpec& spec, const Mat& v, const Mat& w, double t);

// E[exp(-tr(v X_inf))] under the stationary law (b + b^T negative definite).
double stationary_laplace(double alpha, const Mat& b, const Mat& v);

// Exponential-martingale identity: the closed-form value of
// exp(-1/2 tr(u x) - alpha T/2 tr(u a^T a)) * E[exp(1/2 tr(u X_T) - 1/2 tr(v R_T))]
// with v = u b + b^T u + u a^T a u, which must equal 1 for every symmetric u.
double girsanov_identity_check(const WishartSpec& spec, const Mat& u, double T);

}  // namespace wishart
