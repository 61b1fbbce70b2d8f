#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "metroq/config.hpp"

namespace metroq {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr cplx I{0.0, 1.0};

inline CMat identity(Index d) { return CMat::Identity(d, d); }

inline CMat pauli_x() {
  CMat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline CMat pauli_y() {
  CMat m(2, 2);
  m << 0, -I, I, 0;
  return m;
}
inline CMat pauli_z() {
  CMat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
inline CMat hadamard() {
  CMat m(2, 2);
  m << 1, 1, 1, -1;
  return m / std::sqrt(2.0);
}

template <class A, class B>
CMat kron(const A& a, const B& b) {
  return Eigen::kroneckerProduct(CMat(a), CMat(b)).eval();
}

inline double hermiticity_defect(const CMat& a) {
  if (a.size() == 0) return 0.0;
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const CMat& a, double eps = tol.hermitian) {
  return a.rows() == a.cols() && hermiticity_defect(a) <= eps;
}

inline bool is_unitary(const CMat& u, double eps = tol.unitary) {
  if (u.rows() != u.cols()) return false;
  return (u.adjoint() * u - identity(u.rows())).cwiseAbs().maxCoeff() <= eps;
}

inline CMat hermitian_part(const CMat& a) { return 0.5 * (a + a.adjoint()); }

inline Eigen::SelfAdjointEigenSolver<CMat> herm_eig(const CMat& a) {
  return Eigen::SelfAdjointEigenSolver<CMat>(hermitian_part(a));
}

inline double lambda_max(const CMat& a) {
  return herm_eig(a).eigenvalues().maxCoeff();
}

// Spectral norm of a Hermitian matrix.
inline double herm_norm(const CMat& a) {
  if (a.size() == 0) return 0.0;
  return herm_eig(a).eigenvalues().cwiseAbs().maxCoeff();
}

// f(A) for Hermitian A via its eigendecomposition.
template <class F>
CMat herm_func(const CMat& a, F f) {
  auto es = herm_eig(a);
  RVec ev = es.eigenvalues().unaryExpr(f);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

// Square root of a PSD matrix; eigenvalues in [-clamp, 0) are set to zero.
inline CMat psd_sqrt(const CMat& a, double clamp = tol.psd) {
  auto es = herm_eig(a);
  RVec ev = es.eigenvalues();
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -clamp) throw invalid_object("matrix is not positive semidefinite");
    ev[i] = ev[i] > 0.0 ? std::sqrt(ev[i]) : 0.0;
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

// exp(i t h) for Hermitian h.
inline CMat expi_herm(const CMat& h, double t) {
  auto es = herm_eig(h);
  CVec ph = (I * t * es.eigenvalues().cast<cplx>()).array().exp();
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

inline CMat ket_bra(const CVec& a, const CVec& b) { return a * b.adjoint(); }

inline CVec basis_vector(Index d, Index i) {
  CVec v = CVec::Zero(d);
  v[i] = 1.0;
  return v;
}

// Closest unitary in Frobenius norm (polar factor).
inline CMat polar_unitary(const CMat& a) {
  Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

// Orthonormal basis of the Hermitian d x d matrices, in the order
// E_ii, (E_ij + E_ji)/sqrt2, i(E_ij - E_ji)/sqrt2 for i < j.
inline std::vector<CMat> hermitian_basis(Index d) {
  std::vector<CMat> out;
  out.reserve(static_cast<std::size_t>(d * d));
  for (Index i = 0; i < d; ++i) {
    CMat e = CMat::Zero(d, d);
    e(i, i) = 1.0;
    out.push_back(e);
  }
  const double s = 1.0 / std::sqrt(2.0);
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j) {
      CMat e = CMat::Zero(d, d);
      e(i, j) = s;
      e(j, i) = s;
      out.push_back(e);
      CMat f = CMat::Zero(d, d);
      f(i, j) = -I * s;
      f(j, i) = I * s;
      out.push_back(f);
    }
  return out;
}

}  // namespace metroq
