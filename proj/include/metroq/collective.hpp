#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "metroq/ce_bounds.hpp"
#include "metroq/fisher.hpp"
#include "metroq/parallel.hpp"
#include "metroq/readout.hpp"

namespace metroq {

// Collective spin of N qubits restricted to the symmetric subspace. Basis
// index k = 0..N holds m = N/2 - k, i.e. k qubits in |1>.
class SpinOps {
 public:
  explicit SpinOps(int n) : n_(n), j_(0.5 * n) {
    if (n < 1) throw std::invalid_argument("probe count must be positive");
    ladder_.resize(n);
    for (int k = 1; k <= n; ++k) {
      const double m = j_ - k;
      ladder_(k - 1) = std::sqrt(j_ * (j_ + 1) - m * (m + 1));  // <m+1|J+|m>
    }
    RVec diag = RVec::Zero(n + 1);
    RVec sub = 0.5 * ladder_;
    Eigen::SelfAdjointEigenSolver<RMat> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    jx_vals_ = es.eigenvalues();
    jx_vecs_ = es.eigenvectors();
  }

  int n() const { return n_; }
  double j() const { return j_; }
  Index dim() const { return n_ + 1; }
  double m(Index k) const { return j_ - static_cast<double>(k); }

  CVec jz(const CVec& v) const {
    CVec out(v.size());
    for (Index k = 0; k < v.size(); ++k) out(k) = m(k) * v(k);
    return out;
  }
  CVec jp(const CVec& v) const {
    CVec out = CVec::Zero(v.size());
    for (Index k = 1; k < v.size(); ++k) out(k - 1) = ladder_(k - 1) * v(k);
    return out;
  }
  CVec jm(const CVec& v) const {
    CVec out = CVec::Zero(v.size());
    for (Index k = 1; k < v.size(); ++k) out(k) = ladder_(k - 1) * v(k - 1);
    return out;
  }
  CVec jx(const CVec& v) const { return 0.5 * (jp(v) + jm(v)); }
  CVec jy(const CVec& v) const { return (jp(v) - jm(v)) / (2.0 * I); }

  // (b . J) v for a real direction b.
  CVec dot(const Eigen::Vector3d& b, const CVec& v) const { return b(0) * jx(v) + b(1) * jy(v) + b(2) * jz(v); }

  CMat jx_matrix() const { return dense([&](const CVec& v) { return jx(v); }); }
  CMat jy_matrix() const { return dense([&](const CVec& v) { return jy(v); }); }
  CMat jz_matrix() const { return dense([&](const CVec& v) { return jz(v); }); }

  CVec exp_jz(double t, const CVec& v) const {  // exp(-i t Jz) v
    CVec out(v.size());
    for (Index k = 0; k < v.size(); ++k) out(k) = std::exp(-I * (t * m(k))) * v(k);
    return out;
  }
  CVec exp_jx(double t, const CVec& v) const {  // exp(-i t Jx) v
    CVec c = jx_vecs_.transpose().cast<cplx>() * v;
    for (Index k = 0; k < c.size(); ++k) c(k) *= std::exp(-I * (t * jx_vals_(k)));
    return jx_vecs_.cast<cplx>() * c;
  }
  // Jy = R Jx R^dagger with R = exp(-i pi Jz / 2).
  CVec exp_jy(double t, const CVec& v) const {
    const double h = std::numbers::pi / 2;
    return exp_jz(h, exp_jx(t, exp_jz(-h, v)));
  }
  // Eigenvector of Jy with eigenvalue +j.
  CVec jy_top() const { return exp_jz(std::numbers::pi / 2, jx_vecs_.col(n_).cast<cplx>()); }

 private:
  template <class F>
  CMat dense(F&& f) const {
    CMat out(dim(), dim());
    for (Index k = 0; k < dim(); ++k) out.col(k) = f(basis_vector(dim(), k));
    return out;
  }

  int n_;
  double j_;
  RVec ladder_;
  RVec jx_vals_;
  RMat jx_vecs_;
};

class CollectiveState {
 public:
  explicit CollectiveState(CVec amplitudes) : a_(std::move(amplitudes)) {
    if (a_.size() < 2) throw std::invalid_argument("symmetric state needs at least one probe");
    if (!a_.allFinite()) throw invalid_object("state has non-finite amplitudes");
    if (std::abs(a_.norm() - 1.0) > 1e-10) throw invalid_object("collective state is not normalized");
  }
  static CollectiveState normalized(const CVec& v) {
    if (v.norm() == 0.0) throw invalid_object("zero vector cannot be normalized");
    return CollectiveState(v / v.norm());
  }
  static CollectiveState ghz(int n) {
    CVec v = CVec::Zero(n + 1);
    v(0) = v(n) = 1.0 / std::sqrt(2.0);
    return CollectiveState(v);
  }
  const CVec& amplitudes() const { return a_; }
  int N() const { return static_cast<int>(a_.size()) - 1; }

 private:
  CVec a_;
};

// One-axis twisted state rotated so that its antisqueezed direction is
// perpendicular to Jx.
inline CollectiveState one_axis_squeezed(int n, double mu) {
  if (n < 2) throw std::invalid_argument("squeezing needs at least two probes");
  if (!(mu > 0.0) || !(mu < std::numbers::pi)) throw std::invalid_argument("squeezing strength must lie in (0, pi)");
  const SpinOps s(n);
  const double j = s.j();
  const double a = 1.0 - std::pow(std::cos(mu), 2 * j - 2);
  const double b = 4.0 * std::sin(mu / 2) * std::pow(std::cos(mu / 2), 2 * j - 2);
  const double theta = std::numbers::pi / 2 - 0.5 * std::atan2(b, a);
  CVec v = s.jy_top();
  for (Index k = 0; k < v.size(); ++k) v(k) *= std::exp(-I * (0.5 * mu * s.m(k) * s.m(k)));
  return CollectiveState::normalized(s.exp_jy(theta, v));
}

struct ImperfectObservable {
  enum class Mode { sum, product };
  std::vector<double> values;  // one per observed outcome
  Mode mode = Mode::sum;
};

// Measurement basis whose first vector is (|0> + e^{i phi}|1>)/sqrt(2).
inline CMat equatorial_basis(double phi) {
  CMat d = CMat::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = std::exp(-I * phi);
  return hadamard() * d;
}

namespace detail {

struct PauliDecomp {
  double a = 0.0;
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
};

inline PauliDecomp pauli_decomp(const CMat& o) {
  PauliDecomp r;
  r.a = 0.5 * o.trace().real();
  r.b(0) = 0.5 * (o * pauli_x()).trace().real();
  r.b(1) = 0.5 * (o * pauli_y()).trace().real();
  r.b(2) = 0.5 * (o * pauli_z()).trace().real();
  return r;
}

// Apply the same 2x2 operator to every qubit of an n-qubit vector.
inline CVec apply_product(const CMat& op, const CVec& v, int n) {
  CVec out = v;
  const Index dim = v.size();
  for (int q = 0; q < n; ++q) {
    const Index stride = Index{1} << q;
    for (Index i = 0; i < dim; ++i) {
      if (i & stride) continue;
      const cplx x0 = out(i), x1 = out(i | stride);
      out(i) = op(0, 0) * x0 + op(0, 1) * x1;
      out(i | stride) = op(1, 0) * x0 + op(1, 1) * x1;
    }
  }
  return out;
}

inline CVec dicke_to_full(const CVec& c, int n) {
  const Index dim = Index{1} << n;
  CVec out(dim);
  for (Index i = 0; i < dim; ++i) {
    const int k = std::popcount(static_cast<std::uint64_t>(i));
    out(i) = c(k) / std::sqrt(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
  }
  return out;
}

}  // namespace detail

// Error-propagation MSE (times the repetition count) of estimating theta from
// the joint observable built from per-probe outcome values. The probe state is
// exp(i theta Jz)|psi>, each probe is read out through P after the basis V.
inline double error_propagation_imperfect(const CollectiveState& state, double theta, const ImperfectObservable& f,
                                          const DetectionChannel& p, const CMat& v) {
  require_dims(p.inputs() == 2, "local readout must act on qubits");
  require_dims(static_cast<Index>(f.values.size()) == p.outcomes(), "one value per observed outcome is required");
  for (double x : f.values)
    if (!std::isfinite(x)) throw std::invalid_argument("outcome values must be finite");
  const Povm m = povm_from_detection(p, ProjectiveMeasurement::computational(2), v);
  CMat o1 = CMat::Zero(2, 2), q1 = CMat::Zero(2, 2);
  for (std::size_t x = 0; x < f.values.size(); ++x) {
    o1 += f.values[x] * m[x];
    q1 += f.values[x] * f.values[x] * m[x];
  }
  const int n = state.N();
  const SpinOps s(n);
  const CVec psi = s.exp_jz(-theta, state.amplitudes());
  double mean = 0.0, second = 0.0, deriv = 0.0;
  if (f.mode == ImperfectObservable::Mode::sum) {
    const auto od = detail::pauli_decomp(o1), qd = detail::pauli_decomp(q1);
    const CVec bj = s.dot(od.b, psi);
    const CVec opsi = n * od.a * psi + 2.0 * bj;
    mean = psi.dot(opsi).real();
    // Replace the diagonal terms of O^2 by the second-moment operator.
    second = opsi.squaredNorm() - n * (od.a * od.a + od.b.squaredNorm()) - 4.0 * od.a * psi.dot(bj).real() +
             n * qd.a + 2.0 * psi.dot(s.dot(qd.b, psi)).real();
    deriv = -2.0 * opsi.dot(s.jz(psi)).imag();
  } else {
    if (n > 14) throw capacity_exceeded("product-mode observables are limited to 14 probes");
    const CVec full = detail::dicke_to_full(psi, n);
    const CVec ofull = detail::apply_product(o1, full, n);
    mean = full.dot(ofull).real();
    second = full.dot(detail::apply_product(q1, full, n)).real();
    CVec jzf(full.size());
    for (Index i = 0; i < full.size(); ++i)
      jzf(i) = (0.5 * n - std::popcount(static_cast<std::uint64_t>(i))) * full(i);
    deriv = -2.0 * ofull.dot(jzf).imag();
  }
  if (std::abs(deriv) < 1e-300) return std::numeric_limits<double>::infinity();
  return (second - mean * mean) / (deriv * deriv);
}

// Three-term closed form for the collective Jx-type estimator under
// bit-flip readout along the equatorial direction phi.
inline double jx_mse(const CollectiveState& state, double theta, double p, double q, double phi) {
  const double eta = p + q - 1, delta = p - q;
  if (eta == 0.0) return std::numeric_limits<double>::infinity();
  const int n = state.N();
  const SpinOps s(n);
  const CVec psi = s.exp_jz(-theta, state.amplitudes());
  const Eigen::Vector3d dir(std::cos(phi), std::sin(phi), 0.0);
  const CVec jphi = s.dot(dir, psi);
  const double mean = psi.dot(jphi).real();
  const double var = jphi.squaredNorm() - mean * mean;
  const double deriv = -2.0 * jphi.dot(s.jz(psi)).imag();
  if (std::abs(deriv) < 1e-300) return std::numeric_limits<double>::infinity();
  const double d2 = deriv * deriv;
  return var / d2 - delta * mean / (eta * d2) + n * (1 - delta * delta - eta * eta) / (4 * eta * eta * d2);
}

inline double parity_mse_ghz(int n, double p, double q, double varphi) {
  if (n < 1) throw std::invalid_argument("probe count must be positive");
  const double eta = p + q - 1, delta = p - q;
  const double sn = std::sin(n * varphi);
  const double den = n * n * std::pow(eta, 2 * n) * sn * sn;
  if (!(den > 0.0)) return std::numeric_limits<double>::infinity();
  const double t = std::pow(delta, n) + std::pow(eta, n) * std::cos(n * varphi);
  return (1.0 - t * t) / den;
}

struct ParityOptimum {
  double mse = std::numeric_limits<double>::infinity();
  double varphi = 0.0;
};

inline ParityOptimum parity_mse_ghz_opt(int n, double p, double q) {
  const double period = 2 * std::numbers::pi / n;
  const double e = 1e-9 * period;
  auto r = minimize_scalar([&](double v) { return std::min(parity_mse_ghz(n, p, q, v), 1e300); }, e, period - e, 400);
  return {r.f, r.x};
}

struct BruteForceConfig {
  int restarts = 64;
  std::uint64_t seed = 0xb2f7;
  std::size_t max_iters = 20000;
  unsigned threads = 1;
};

struct BruteForceResult {
  double value = 0.0;
  std::vector<double> restart_values;
  double spread = 0.0;  // best minus median restart value
  bool converged = false;
};

namespace detail {

// Observed Hamming-weight distribution from the ideal one, for independent
// two-outcome detection on each probe. Row a: a observed "0" outcomes.
inline RMat hamming_channel(const DetectionChannel& p, int n) {
  RMat out = RMat::Zero(n + 1, n + 1);
  const double p00 = p(0, 0), p01 = p(0, 1);
  auto binom = [](int k, int a, double r) {
    return std::exp(std::lgamma(k + 1.0) - std::lgamma(a + 1.0) - std::lgamma(k - a + 1.0)) * std::pow(r, a) *
           std::pow(1 - r, k - a);
  };
  for (int k = 0; k <= n; ++k)  // k ideal "1" outcomes
    for (int a = 0; a <= n - k; ++a)
      for (int b = 0; b <= k; ++b) out(a + b, k) += binom(n - k, a, p00) * binom(k, b, p01);
  return out;
}

}  // namespace detail

// Heuristic local-control optimum: symmetric input state, identical local
// rotation before the fixed readout, Hamming-weight statistics.
inline BruteForceResult brute_force_imperfect_qfi(int n, const DetectionChannel& p, const BruteForceConfig& cfg = {}) {
  if (n < 1) throw std::invalid_argument("probe count must be positive");
  if (n > 6) throw capacity_exceeded("brute-force search is limited to six probes");
  require_dims(p.inputs() == 2 && p.outcomes() == 2, "brute force expects a two-outcome qubit readout");
  const SpinOps s(n);
  const RMat ham = detail::hamming_channel(p, n);
  const Index d = n + 1;
  const Objective neg_fi = [&](const RVec& x) {
    CVec c(d);
    for (Index k = 0; k < d; ++k) c(k) = cplx(x(k), x(d + k));
    const double nrm = c.norm();
    if (nrm < 1e-12) return 0.0;
    c /= nrm;
    auto rot = [&](const CVec& v) {
      return s.exp_jz(x(2 * d), s.exp_jy(x(2 * d + 1), s.exp_jz(x(2 * d + 2), v)));
    };
    const CVec psi = rot(c);
    const CVec dpsi = rot(I * s.jz(c));
    RVec w(d), dw(d);
    for (Index k = 0; k < d; ++k) {
      w(k) = std::norm(psi(k));
      dw(k) = 2.0 * (std::conj(psi(k)) * dpsi(k)).real();
    }
    const RVec qv = ham * w, dq = ham * dw;
    double f = 0.0;
    for (Index k = 0; k < d; ++k)
      if (qv(k) > 1e-14) f += dq(k) * dq(k) / qv(k);
    return -f;
  };
  struct Run {
    double value = 0.0;
    bool converged = false;
  };
  auto runs = parallel_map<Run>(
      static_cast<std::size_t>(std::max(1, cfg.restarts)),
      [&](std::size_t r) {
        std::mt19937_64 rng(derive_seed(cfg.seed, r));
        RVec x0 = random_normal(2 * d + 3, rng);
        SimplexOptions so;
        so.max_iters = cfg.max_iters;
        auto a = nelder_mead(neg_fi, x0, so);
        so.step = 0.05;
        auto b = nelder_mead(neg_fi, a.x, so);
        return Run{-std::min(a.f, b.f), b.converged};
      },
      cfg.threads);
  BruteForceResult res;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    res.restart_values.push_back(runs[i].value);
    if (runs[i].value > res.value) {
      res.value = runs[i].value;
      arg = i;
    }
  }
  res.converged = multistart_converged(res.restart_values, arg, runs[arg].converged, 1e-7);
  std::vector<double> sorted = res.restart_values;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  res.spread = res.value - sorted[sorted.size() / 2];
  return res;
}

// Rotation of the readout basis towards the encoding axis by polar angle t.
inline CMat polar_control(double t) { return expi_herm(pauli_y() / 2.0, t); }

struct LocalCeBound {
  double value = 0.0;
  double polar = 0.0;
  bool converged = true;
};

// Finite-N channel-extension bound for a qubit readout M under phase
// encoding sigma_z / 2, maximized over the polar angle of the control.
inline LocalCeBound local_ce_bound(const Povm& m, int n, const CeSolverConfig& cfg = {}, int grid = 12) {
  require_dims(m.dim() == 2, "local bound expects a qubit readout");
  const UnitaryEncoding enc(pauli_z() / 2.0);
  LocalCeBound out;
  auto eval = [&](double t) {
    auto r = finite_ce_bound(m, enc, polar_control(t), n, cfg);
    out.converged = out.converged && r.converged;
    return r.bound_finite;
  };
  const double h = std::numbers::pi / 2;
  auto r = maximize_scalar(eval, -h, h, grid);
  out.value = r.f;
  out.polar = r.x;
  return out;
}

}  // namespace metroq
