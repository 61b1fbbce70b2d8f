#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "metroq/linalg.hpp"

namespace metroq {

class StateVector {
 public:
  explicit StateVector(CVec amplitudes) : a_(std::move(amplitudes)) {
    if (a_.size() == 0) throw invalid_object("state vector must be nonempty");
    if (std::abs(a_.squaredNorm() - 1.0) > tol.norm) throw invalid_object("state vector is not normalised");
  }
  static StateVector normalized(const CVec& v) {
    const double n = v.norm();
    if (!(n > 0.0)) throw invalid_object("cannot normalise the zero vector");
    return StateVector(v / n);
  }
  static StateVector basis(Index d, Index i) { return StateVector(basis_vector(d, i)); }

  const CVec& amplitudes() const { return a_; }
  Index dim() const { return a_.size(); }
  CMat projector() const { return a_ * a_.adjoint(); }

 private:
  CVec a_;
};

class DensityMatrix {
 public:
  explicit DensityMatrix(CMat m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0) throw dimension_mismatch("density matrix must be square");
    if (!is_hermitian(m_)) throw invalid_object("density matrix is not Hermitian");
    if (std::abs(m_.trace() - 1.0) > tol.trace) throw invalid_object("density matrix trace differs from one");
    if (herm_eig(m_).eigenvalues().minCoeff() < -tol.psd)
      throw invalid_object("density matrix has a negative eigenvalue");
    m_ = hermitian_part(m_);
  }
  static DensityMatrix pure(const StateVector& s) { return DensityMatrix(s.projector()); }
  static DensityMatrix maximally_mixed(Index d) { return DensityMatrix(identity(d) / double(d)); }

  const CMat& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }

 private:
  CMat m_;
};

class Povm {
 public:
  explicit Povm(std::vector<CMat> elements) : e_(std::move(elements)) {
    if (e_.empty()) throw invalid_object("POVM needs at least one element");
    const Index d = e_.front().rows();
    CMat sum = CMat::Zero(d, d);
    for (const auto& m : e_) {
      require_dims(m.rows() == d && m.cols() == d, "POVM elements must share one square shape");
      if (!is_hermitian(m, tol.completeness)) throw invalid_object("POVM element is not Hermitian");
      if (herm_eig(m).eigenvalues().minCoeff() < -tol.psd)
        throw invalid_object("POVM element is not positive semidefinite");
      sum += m;
    }
    if ((sum - identity(d)).cwiseAbs().maxCoeff() > tol.completeness)
      throw invalid_object("POVM elements do not sum to the identity");
    for (auto& m : e_) m = hermitian_part(m);
  }

  const std::vector<CMat>& elements() const { return e_; }
  const CMat& operator[](std::size_t x) const { return e_[x]; }
  Index dim() const { return e_.front().rows(); }
  std::size_t outcomes() const { return e_.size(); }

 private:
  std::vector<CMat> e_;
};

class ProjectiveMeasurement {
 public:
  explicit ProjectiveMeasurement(std::vector<CMat> projectors) : p_(std::move(projectors)) {
    if (p_.empty()) throw invalid_object("projective measurement needs at least one projector");
    const Index d = p_.front().rows();
    require_dims(static_cast<Index>(p_.size()) == d, "a rank-one projective measurement has d elements");
    CMat sum = CMat::Zero(d, d);
    for (std::size_t i = 0; i < p_.size(); ++i) {
      require_dims(p_[i].rows() == d && p_[i].cols() == d, "projectors must share one square shape");
      if (!is_hermitian(p_[i], tol.orthogonality)) throw invalid_object("projector is not Hermitian");
      for (std::size_t j = 0; j < p_.size(); ++j) {
        CMat prod = p_[i] * p_[j];
        if (i == j) prod -= p_[i];
        if (prod.cwiseAbs().maxCoeff() > tol.orthogonality)
          throw invalid_object("projectors are not mutually orthogonal idempotents");
      }
      if (std::abs(p_[i].trace() - 1.0) > tol.orthogonality) throw invalid_object("projector is not rank one");
      sum += p_[i];
    }
    if ((sum - identity(d)).cwiseAbs().maxCoeff() > tol.orthogonality)
      throw invalid_object("projectors do not sum to the identity");
  }

  // Projectors onto the columns of a unitary.
  static ProjectiveMeasurement from_basis(const CMat& u) {
    if (!is_unitary(u)) throw invalid_object("basis matrix is not unitary");
    std::vector<CMat> ps;
    for (Index i = 0; i < u.cols(); ++i) ps.push_back(u.col(i) * u.col(i).adjoint());
    return ProjectiveMeasurement(std::move(ps));
  }
  static ProjectiveMeasurement computational(Index d) { return from_basis(identity(d)); }

  const std::vector<CMat>& projectors() const { return p_; }
  Index dim() const { return p_.front().rows(); }
  Povm as_povm() const { return Povm(p_); }

 private:
  std::vector<CMat> p_;
};

// Column-stochastic matrix p(x|i): rows are observed outcomes x, columns
// ideal outcomes i.
class DetectionChannel {
 public:
  explicit DetectionChannel(RMat p) : p_(std::move(p)) {
    if (p_.rows() == 0 || p_.cols() == 0) throw invalid_object("detection channel must be nonempty");
    if (!p_.allFinite() || p_.minCoeff() < 0.0 || p_.maxCoeff() > 1.0)
      throw invalid_object("detection channel entries must lie in [0, 1]");
    for (Index i = 0; i < p_.cols(); ++i)
      if (std::abs(p_.col(i).sum() - 1.0) > tol.stochastic)
        throw invalid_object("detection channel column does not sum to one");
  }
  static DetectionChannel identity(Index d) { return DetectionChannel(RMat::Identity(d, d)); }
  // Asymmetric bit flip: P = [[p, 1-q], [1-p, q]].
  static DetectionChannel bit_flip(double p, double q) {
    RMat m(2, 2);
    m << p, 1 - q, 1 - p, q;
    return DetectionChannel(m);
  }

  const RMat& matrix() const { return p_; }
  double operator()(Index x, Index i) const { return p_(x, i); }
  Index outcomes() const { return p_.rows(); }
  Index inputs() const { return p_.cols(); }

 private:
  RMat p_;
};

// Channel with Kraus operators k_l : C^d_in -> C^d_out.
class KrausSet {
 public:
  explicit KrausSet(std::vector<CMat> ops) : k_(std::move(ops)) {
    if (k_.empty()) throw invalid_object("Kraus set must be nonempty");
    const Index din = k_.front().cols(), dout = k_.front().rows();
    CMat sum = CMat::Zero(din, din);
    for (const auto& k : k_) {
      require_dims(k.cols() == din && k.rows() == dout, "Kraus operators must share one shape");
      sum += k.adjoint() * k;
    }
    if ((sum - metroq::identity(din)).cwiseAbs().maxCoeff() > tol.completeness)
      throw invalid_object("Kraus operators are not trace preserving");
  }
  static KrausSet identity(Index d) { return KrausSet({metroq::identity(d)}); }

  const std::vector<CMat>& operators() const { return k_; }
  Index input_dim() const { return k_.front().cols(); }
  Index output_dim() const { return k_.front().rows(); }

  CMat apply(const CMat& rho) const {
    require_dims(rho.rows() == input_dim() && rho.cols() == input_dim(), "channel input dimension");
    CMat out = CMat::Zero(output_dim(), output_dim());
    for (const auto& k : k_) out += k * rho * k.adjoint();
    return out;
  }
  CMat adjoint(const CMat& y) const {
    require_dims(y.rows() == output_dim() && y.cols() == output_dim(), "channel output dimension");
    CMat out = CMat::Zero(input_dim(), input_dim());
    for (const auto& k : k_) out += k.adjoint() * y * k;
    return out;
  }

 private:
  std::vector<CMat> k_;
};

// U_theta = exp(i h theta).
class UnitaryEncoding {
 public:
  explicit UnitaryEncoding(CMat h, double theta0 = 0.0) : h_(std::move(h)), theta0_(theta0) {
    if (!is_hermitian(h_)) throw invalid_object("encoding generator is not Hermitian");
    h_ = hermitian_part(h_);
  }
  const CMat& generator() const { return h_; }
  double theta0() const { return theta0_; }
  Index dim() const { return h_.rows(); }
  CMat unitary(double theta) const { return expi_herm(h_, theta); }
  CMat unitary() const { return unitary(theta0_); }

 private:
  CMat h_;
  double theta0_;
};

inline Povm povm_from_detection(const DetectionChannel& p, const ProjectiveMeasurement& pi, const CMat& v) {
  const Index d = pi.dim();
  require_dims(p.inputs() == d, "detection channel columns must match the projectors");
  require_dims(v.rows() == d && v.cols() == d, "control unitary dimension");
  if (!is_unitary(v)) throw invalid_object("control matrix is not unitary");
  std::vector<CMat> els;
  els.reserve(static_cast<std::size_t>(p.outcomes()));
  for (Index x = 0; x < p.outcomes(); ++x) {
    CMat m = CMat::Zero(d, d);
    for (Index i = 0; i < d; ++i) m += p(x, i) * pi.projectors()[static_cast<std::size_t>(i)];
    els.push_back(v.adjoint() * m * v);
  }
  return Povm(std::move(els));
}

inline Povm povm_from_detection(const DetectionChannel& p, const ProjectiveMeasurement& pi) {
  return povm_from_detection(p, pi, identity(pi.dim()));
}

// Bit-flip POVM measured in the |+>, |-> basis.
inline Povm bit_flip_povm(double p, double q) {
  return povm_from_detection(DetectionChannel::bit_flip(p, q), ProjectiveMeasurement::from_basis(hadamard()));
}

inline RVec outcome_distribution(const CMat& rho, const Povm& m) {
  require_dims(rho.rows() == m.dim() && rho.cols() == m.dim(), "state and POVM dimensions differ");
  RVec q(static_cast<Index>(m.outcomes()));
  for (std::size_t x = 0; x < m.outcomes(); ++x)
    q[static_cast<Index>(x)] = std::max(0.0, (rho * m[x]).trace().real());
  return q;
}

inline RVec outcome_distribution(const DensityMatrix& rho, const Povm& m) {
  return outcome_distribution(rho.matrix(), m);
}

inline RVec outcome_distribution(const StateVector& psi, const Povm& m) {
  require_dims(psi.dim() == m.dim(), "state and POVM dimensions differ");
  RVec q(static_cast<Index>(m.outcomes()));
  for (std::size_t x = 0; x < m.outcomes(); ++x)
    q[static_cast<Index>(x)] = std::max(0.0, psi.amplitudes().dot(m[x] * psi.amplitudes()).real());
  return q;
}

// Quantum-classical channel {|x><i| sqrt(M_x)}.
inline KrausSet conjugate_map_qc(const Povm& m) {
  const Index d = m.dim(), nx = static_cast<Index>(m.outcomes());
  std::vector<CMat> ks;
  for (Index x = 0; x < nx; ++x) {
    const CMat s = psd_sqrt(m[static_cast<std::size_t>(x)]);
    for (Index i = 0; i < d; ++i) {
      CMat k = CMat::Zero(nx, d);
      k.row(x) = s.row(i);
      ks.push_back(k);
    }
  }
  return KrausSet(std::move(ks));
}

// Rank-d decomposition {sum_x |x><i| sqrt(M_x)}.
inline KrausSet conjugate_map_compact(const Povm& m) {
  const Index d = m.dim(), nx = static_cast<Index>(m.outcomes());
  std::vector<CMat> roots;
  for (const auto& e : m.elements()) roots.push_back(psd_sqrt(e));
  std::vector<CMat> ks;
  for (Index i = 0; i < d; ++i) {
    CMat k = CMat::Zero(nx, d);
    for (Index x = 0; x < nx; ++x) k.row(x) = roots[static_cast<std::size_t>(x)].row(i);
    ks.push_back(k);
  }
  return KrausSet(std::move(ks));
}

// Flag projectors |x><x| on the output of the channels above.
inline CMat flag_projector(Index outcomes, Index x) {
  CMat p = CMat::Zero(outcomes, outcomes);
  p(x, x) = 1.0;
  return p;
}

inline bool is_nontrivial(const DetectionChannel& p) {
  for (Index i = 0; i < p.inputs(); ++i)
    for (Index j = i + 1; j < p.inputs(); ++j) {
      bool overlap = false;
      for (Index x = 0; x < p.outcomes() && !overlap; ++x) overlap = p(x, i) * p(x, j) > 0.0;
      if (!overlap) return false;
    }
  return true;
}

inline bool is_information_erasing(const Povm& m) {
  const double d = static_cast<double>(m.dim());
  for (const auto& e : m.elements()) {
    const cplx c = e.trace() / d;
    if ((e - c * identity(m.dim())).cwiseAbs().maxCoeff() > tol.completeness) return false;
  }
  return true;
}

inline bool povm_commutes(const Povm& m, double eps = 1e-10) {
  for (std::size_t a = 0; a < m.outcomes(); ++a)
    for (std::size_t b = a + 1; b < m.outcomes(); ++b)
      if ((m[a] * m[b] - m[b] * m[a]).cwiseAbs().maxCoeff() > eps) return false;
  return true;
}

// Common eigenbasis (columns) of a commuting POVM, obtained by diagonalising
// a generic real combination of its elements.
inline std::optional<CMat> common_eigenbasis(const Povm& m) {
  if (!povm_commutes(m)) return std::nullopt;
  CMat comb = CMat::Zero(m.dim(), m.dim());
  for (std::size_t x = 0; x < m.outcomes(); ++x) comb += std::sqrt(double(x) + 2.0) * m[x];
  CMat u = herm_eig(comb).eigenvectors();
  for (const auto& e : m.elements()) {
    CMat diag = u.adjoint() * e * u;
    diag.diagonal().setZero();
    if (diag.cwiseAbs().maxCoeff() > 1e-8) return std::nullopt;
  }
  return u;
}

inline Povm tensor_povm(const Povm& m, int n) {
  if (n < 1) throw std::invalid_argument("tensor power must be at least 1");
  double dn = std::pow(double(m.dim()), n), xn = std::pow(double(m.outcomes()), n);
  if (dn > double(tol.max_dim) || xn > double(tol.max_outcomes))
    throw capacity_exceeded("tensor power exceeds the configured memory cap");
  std::vector<CMat> cur = m.elements();
  for (int k = 1; k < n; ++k) {
    std::vector<CMat> next;
    next.reserve(cur.size() * m.outcomes());
    for (const auto& a : cur)
      for (const auto& b : m.elements()) next.push_back(kron(a, b));
    cur = std::move(next);
  }
  return Povm(std::move(cur));
}

inline Povm tensor_povm(const Povm& a, const Povm& b) {
  std::vector<CMat> els;
  for (const auto& x : a.elements())
    for (const auto& y : b.elements()) els.push_back(kron(x, y));
  return Povm(std::move(els));
}

// The trivial one-outcome POVM {1} on dimension d.
inline Povm trivial_povm(Index d) { return Povm({identity(d)}); }

inline StateVector tensor_state(const StateVector& s, int n) {
  if (n < 1) throw std::invalid_argument("tensor power must be at least 1");
  if (std::pow(double(s.dim()), n) > double(tol.max_dim))
    throw capacity_exceeded("tensor power exceeds the configured memory cap");
  CVec v = s.amplitudes();
  for (int k = 1; k < n; ++k) v = kron(v, s.amplitudes());
  return StateVector::normalized(v);
}

inline DensityMatrix tensor_state(const DensityMatrix& r, int n) {
  if (n < 1) throw std::invalid_argument("tensor power must be at least 1");
  if (std::pow(double(r.dim()), n) > double(tol.max_dim))
    throw capacity_exceeded("tensor power exceeds the configured memory cap");
  CMat m = r.matrix();
  for (int k = 1; k < n; ++k) m = kron(m, r.matrix());
  return DensityMatrix(hermitian_part(m) / m.trace().real());
}

}  // namespace metroq
