#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "metroq/optim.hpp"
#include "metroq/parallel.hpp"
#include "metroq/qcore.hpp"

namespace metroq {

enum class Method { closed_form, summation, optimizer, seesaw, moment_bound };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::closed_form: return "closed_form";
    case Method::summation: return "summation";
    case Method::optimizer: return "optimizer";
    case Method::seesaw: return "seesaw";
    case Method::moment_bound: return "moment_bound";
  }
  return "unknown";
}

struct TracePoint {
  std::size_t iterate;
  double objective;
};

// A Fisher-information value together with how it was obtained.
struct FiReport {
  double value = 0.0;
  Method method = Method::closed_form;
  std::vector<TracePoint> trace;
  double tolerance = 0.0;
  bool converged = true;
  std::string note;
};

class OrthoPair {
 public:
  OrthoPair(StateVector xi, StateVector xi_perp) : xi_(std::move(xi)), perp_(std::move(xi_perp)) {
    require_dims(xi_.dim() == perp_.dim(), "pair states must share a dimension");
    if (std::abs(xi_.amplitudes().dot(perp_.amplitudes())) > tol.orthogonality)
      throw invalid_object("pair states are not orthogonal");
  }
  const StateVector& xi() const { return xi_; }
  const StateVector& xi_perp() const { return perp_; }
  Index dim() const { return xi_.dim(); }

 private:
  StateVector xi_;
  StateVector perp_;
};

// sum_x dp(x)^2 / p(x).
inline double classical_fi(const RVec& p, const RVec& dp, double zero = tol.zero_prob) {
  require_dims(p.size() == dp.size(), "probabilities and derivatives differ in length");
  if (p.size() > 0 && (p.minCoeff() < -tol.completeness || std::abs(p.sum() - 1.0) > tol.completeness))
    throw std::invalid_argument("not a probability vector");
  if (std::abs(dp.sum()) > tol.score_sum) throw std::invalid_argument("probability derivatives do not sum to zero");
  double f = 0.0;
  for (Index x = 0; x < p.size(); ++x) {
    const double d2 = dp[x] * dp[x];
    if (p[x] < zero) {
      if (d2 < zero) continue;
      throw support_mismatch("nonzero derivative on a zero-probability outcome");
    }
    f += d2 / p[x];
  }
  return f;
}

inline double qfi_pure(const CVec& psi, const CVec& dpsi) {
  require_dims(psi.size() == dpsi.size(), "state and derivative differ in length");
  if (std::abs(psi.squaredNorm() - 1.0) > tol.norm) throw invalid_object("state vector is not normalised");
  const cplx o = psi.dot(dpsi);
  return std::max(0.0, 4.0 * (dpsi.squaredNorm() - std::norm(o)));
}

inline double qfi_pure(const StateVector& psi, const CVec& dpsi) { return qfi_pure(psi.amplitudes(), dpsi); }

struct SldResult {
  double value = 0.0;
  CMat L;
};

namespace detail {

// SLD in the eigenbasis of rho, restricted to pairs with lambda_j + lambda_k
// above the support cut-off.
inline SldResult sld(const CMat& rho, const CMat& drho) {
  auto es = herm_eig(rho);
  const CMat& u = es.eigenvectors();
  const RVec& lam = es.eigenvalues();
  const CMat d = u.adjoint() * hermitian_part(drho) * u;
  const Index n = rho.rows();
  CMat l = CMat::Zero(n, n);
  double f = 0.0;
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k) {
      const double s = std::max(0.0, lam[j]) + std::max(0.0, lam[k]);
      if (s <= tol.support) continue;
      l(j, k) = 2.0 * d(j, k) / s;
      f += 2.0 * std::norm(d(j, k)) / s;
    }
  return {f, hermitian_part(u * l * u.adjoint())};
}

}  // namespace detail

inline SldResult qfi_sld(const DensityMatrix& rho, const CMat& drho) {
  require_dims(drho.rows() == rho.dim() && drho.cols() == rho.dim(), "state derivative dimension");
  if (!is_hermitian(drho, 1e-8)) throw std::invalid_argument("state derivative is not Hermitian");
  if (std::abs(drho.trace()) > 1e-8) throw std::invalid_argument("state derivative is not traceless");
  return detail::sld(rho.matrix(), drho);
}

inline double channel_qfi_unitary(const UnitaryEncoding& enc) {
  const RVec ev = herm_eig(enc.generator()).eigenvalues();
  const double w = ev.maxCoeff() - ev.minCoeff();
  return w * w;
}

// Born-rule distribution of V|psi> under M and its theta derivative.
inline std::pair<RVec, RVec> imperfect_distribution(const CVec& psi, const CVec& dpsi, const Povm& m, const CMat& v) {
  require_dims(psi.size() == m.dim() && dpsi.size() == m.dim(), "state and POVM dimensions differ");
  require_dims(v.rows() == m.dim() && v.cols() == m.dim(), "control unitary dimension");
  const CVec a = v * psi, da = v * dpsi;
  RVec q(static_cast<Index>(m.outcomes())), dq(q.size());
  for (std::size_t x = 0; x < m.outcomes(); ++x) {
    const CVec ma = m[x] * a;
    q[static_cast<Index>(x)] = std::max(0.0, a.dot(ma).real());
    dq[static_cast<Index>(x)] = 2.0 * da.dot(ma).real();
  }
  return {q, dq};
}

inline double imperfect_fi(const StateVector& psi, const CVec& dpsi, const Povm& m, const CMat& v) {
  auto [q, dq] = imperfect_distribution(psi.amplitudes(), dpsi, m, v);
  return classical_fi(q, dq);
}

// sum_x Re<xi_perp|M_x|xi>^2 / <xi|M_x|xi>.
inline double gamma_objective(const Povm& m, const CVec& xi, const CVec& perp) {
  double g = 0.0;
  for (const auto& e : m.elements()) {
    const CVec v = e * xi;
    const double w = xi.dot(v).real();
    if (w < tol.zero_prob) continue;
    const double num = perp.dot(v).real();
    g += num * num / w;
  }
  return g;
}

inline double gamma_objective(const Povm& m, const OrthoPair& pair) {
  return gamma_objective(m, pair.xi().amplitudes(), pair.xi_perp().amplitudes());
}

struct GammaOptions {
  int restarts = 32;
  double tol = 1e-9;
  std::uint64_t seed = 0x5eed;
  std::size_t max_iters = 20000;
  std::vector<CVec> seeds;  // extra starting states for xi
  unsigned threads = 1;
};

struct GammaResult {
  double value = 0.0;
  OrthoPair pair;
  FiReport report;
};

namespace detail {

inline CVec complex_from_real(const RVec& r) {
  const Index d = r.size() / 2;
  CVec v(d);
  for (Index i = 0; i < d; ++i) v[i] = cplx(r[i], r[d + i]);
  return v;
}

inline RVec real_from_complex(const CVec& v) {
  RVec r(2 * v.size());
  r << v.real(), v.imag();
  return r;
}

// Any unit vector orthogonal to xi.
inline CVec orthogonal_to(const CVec& xi) {
  for (Index i = 0; i < xi.size(); ++i) {
    CVec e = basis_vector(xi.size(), i);
    e -= xi.dot(e) * xi;
    if (e.norm() > 0.5) return e / e.norm();
  }
  throw invalid_object("no orthogonal complement in dimension one");
}

// For fixed unit xi, the optimal xi_perp is the top eigenvector of the real
// quadratic form Q = sum_x v_x v_x^T / w_x (v_x = M_x xi as a real 2d-vector)
// deflated by xi. Returns (value, xi_perp).
// Coordinates (Re v_0, Re v_1, Im v_1, ...) of a state whose first amplitude
// is real.
inline CVec phase_fixed_state(const RVec& y) {
  const Index d = (y.size() + 1) / 2;
  CVec v(d);
  v(0) = y(0);
  for (Index i = 1; i < d; ++i) v(i) = cplx(y(2 * i - 1), y(2 * i));
  return v;
}

inline RVec phase_fixed_coords(CVec v) {
  const Index d = v.size();
  if (std::abs(v(0)) > 0.0) v *= std::conj(v(0)) / std::abs(v(0));
  RVec y(2 * d - 1);
  y(0) = v(0).real();
  for (Index i = 1; i < d; ++i) {
    y(2 * i - 1) = v(i).real();
    y(2 * i) = v(i).imag();
  }
  return y;
}

inline std::pair<double, CVec> gamma_inner(const Povm& m, const CVec& xi) {
  const Index d = xi.size();
  RMat q = RMat::Zero(2 * d, 2 * d);
  for (const auto& e : m.elements()) {
    const CVec v = e * xi;
    const double w = xi.dot(v).real();
    if (w < tol.zero_prob) continue;
    const RVec vr = real_from_complex(v);
    q.noalias() += vr * vr.transpose() / w;
  }
  const RVec xr = real_from_complex(xi);
  q -= xr * xr.transpose();
  Eigen::SelfAdjointEigenSolver<RMat> es(q);
  CVec perp = complex_from_real(es.eigenvectors().col(2 * d - 1));
  perp -= xi.dot(perp) * xi;
  if (perp.norm() < 1e-6) perp = orthogonal_to(xi);
  perp /= perp.norm();
  return {gamma_objective(m, xi, perp), perp};
}

}  // namespace detail

inline GammaResult gamma_coefficient(const Povm& m, const GammaOptions& opt = {}) {
  const Index d = m.dim();
  if (d < 2) throw dimension_mismatch("gamma needs dimension at least two");
  std::vector<CVec> starts = opt.seeds;
  if (auto u = common_eigenbasis(m)) {
    // Seed with the equal superposition of the common-eigenbasis pair with
    // the smallest Hellinger overlap.
    double best = 2.0;
    CVec seed;
    for (Index j = 0; j < d; ++j)
      for (Index k = j + 1; k < d; ++k) {
        double c = 0.0;
        for (const auto& e : m.elements())
          c += std::sqrt(std::max(0.0, (u->col(j).dot(e * u->col(j))).real() * (u->col(k).dot(e * u->col(k))).real()));
        if (c < best) {
          best = c;
          seed = (u->col(j) + u->col(k)) / std::sqrt(2.0);
        }
      }
    starts.push_back(seed);
  }
  // Basis states and their pairwise superpositions with real and imaginary
  // relative phase spread the deterministic starts over the state space.
  for (Index j = 0; j < d; ++j) {
    starts.push_back(basis_vector(d, j));
    for (Index k = j + 1; k < d; ++k)
      for (cplx ph : {cplx(1.0), cplx(-1.0), I, -I})
        starts.push_back((basis_vector(d, j) + ph * basis_vector(d, k)) / std::sqrt(2.0));
  }
  for (int r = 0; r < opt.restarts; ++r) {
    std::mt19937_64 rng(derive_seed(opt.seed, static_cast<std::uint64_t>(r)));
    starts.push_back(random_state(d, rng));
  }
  // The first amplitude is kept real and the norm is held near one by a
  // quadratic penalty, so the simplex has no flat directions to drift along.
  const Objective f = [&](const RVec& y) {
    const CVec v = detail::phase_fixed_state(y);
    const double n = v.norm();
    if (!(n > 1e-12)) return 0.0;
    return -detail::gamma_inner(m, v / n).first + (n * n - 1) * (n * n - 1);
  };
  SimplexOptions so;
  so.step = 0.25;
  so.size_tol = std::max(1e-10, std::sqrt(opt.tol) * 1e-2);
  so.max_iters = opt.max_iters;
  auto runs = parallel_map<MinimizeResult>(
      starts.size(), [&](std::size_t i) { return nelder_mead(f, detail::phase_fixed_coords(starts[i]), so); },
      opt.threads);

  FiReport rep;
  rep.method = Method::optimizer;
  rep.tolerance = opt.tol;
  double best = -1.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (-runs[i].f > best) {
      best = -runs[i].f;
      arg = i;
    }
    rep.trace.push_back({i, best});
  }
  std::vector<double> values;
  for (const auto& r : runs) values.push_back(-r.f);
  rep.converged = multistart_converged(values, arg, runs[arg].converged, std::sqrt(opt.tol));
  const CVec xi = detail::phase_fixed_state(runs[arg].x).normalized();
  auto [val, perp] = detail::gamma_inner(m, xi);
  rep.value = std::max(0.0, val);
  rep.note = std::to_string(starts.size()) + " starts";
  GammaResult out{rep.value, OrthoPair(StateVector::normalized(xi), StateVector::normalized(perp)), rep};
  return out;
}

struct GammaClassicalResult {
  double value = 0.0;
  RVec a, b;
  FiReport report;
};

// Real-vector version for the commuting POVM induced by a detection
// channel: maximise sum_x (sum_i p(x|i) a_i b_i)^2 / sum_i p(x|i) a_i^2 over
// orthonormal real a, b.
inline GammaClassicalResult gamma_classical(const DetectionChannel& p, const GammaOptions& opt = {}) {
  const Index d = p.inputs();
  if (d < 2) throw dimension_mismatch("gamma needs dimension at least two");
  const RMat& pm = p.matrix();
  auto inner = [&](const RVec& a) -> std::pair<double, RVec> {
    RMat q = RMat::Zero(d, d);
    for (Index x = 0; x < pm.rows(); ++x) {
      const RVec v = pm.row(x).transpose().cwiseProduct(a);
      const double w = v.dot(a);
      if (w < tol.zero_prob) continue;
      q.noalias() += v * v.transpose() / w;
    }
    q -= a * a.transpose();
    Eigen::SelfAdjointEigenSolver<RMat> es(q);
    RVec b = es.eigenvectors().col(d - 1);
    b -= b.dot(a) * a;
    if (b.norm() < 1e-6) {
      for (Index i = 0; i < d; ++i) {
        RVec e = RVec::Unit(d, i);
        e -= e.dot(a) * a;
        if (e.norm() > 0.5) {
          b = e;
          break;
        }
      }
    }
    b.normalize();
    double g = 0.0;
    for (Index x = 0; x < pm.rows(); ++x) {
      const double w = (pm.row(x).transpose().cwiseProduct(a)).dot(a);
      if (w < tol.zero_prob) continue;
      const double n = (pm.row(x).transpose().cwiseProduct(a)).dot(b);
      g += n * n / w;
    }
    return {g, b};
  };
  std::vector<RVec> starts;
  for (Index j = 0; j < d; ++j)
    for (Index k = j + 1; k < d; ++k) {
      RVec a = RVec::Zero(d);
      a[j] = a[k] = 1.0 / std::sqrt(2.0);
      starts.push_back(a);
    }
  for (int r = 0; r < opt.restarts; ++r) {
    std::mt19937_64 rng(derive_seed(opt.seed, static_cast<std::uint64_t>(r)));
    starts.push_back(random_normal(d, rng).normalized());
  }
  const Objective f = [&](const RVec& x) {
    const double n = x.norm();
    if (!(n > 1e-12)) return 0.0;
    return -inner(x / n).first;
  };
  SimplexOptions so;
  so.step = 0.25;
  so.size_tol = std::max(1e-12, opt.tol * 1e-2);
  so.max_iters = opt.max_iters;
  auto runs = parallel_map<MinimizeResult>(
      starts.size(), [&](std::size_t i) { return nelder_mead(f, starts[i], so); }, opt.threads);
  GammaClassicalResult out;
  out.report.method = Method::optimizer;
  out.report.tolerance = opt.tol;
  double best = -1.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (-runs[i].f > best) {
      best = -runs[i].f;
      arg = i;
    }
    out.report.trace.push_back({i, best});
  }
  std::vector<double> values;
  for (const auto& r : runs) values.push_back(-r.f);
  out.report.converged = multistart_converged(values, arg, runs[arg].converged, std::sqrt(opt.tol));
  out.a = runs[arg].x.normalized();
  auto [val, b] = inner(out.a);
  out.b = b;
  out.value = std::max(0.0, val);
  out.report.value = out.value;
  return out;
}

struct DistinguishableResult {
  std::optional<OrthoPair> pair;
  bool decidable = true;  // false for non-commuting POVMs
};

inline DistinguishableResult perfectly_distinguishable_pair(const Povm& m, double eps = 1e-8) {
  DistinguishableResult out;
  auto u = common_eigenbasis(m);
  if (!u) {
    out.decidable = false;
    return out;
  }
  for (Index j = 0; j < m.dim(); ++j)
    for (Index k = j + 1; k < m.dim(); ++k) {
      bool ok = true;
      for (const auto& e : m.elements()) {
        const double a = (e * u->col(j)).norm(), b = (e * u->col(k)).norm();
        if (a > eps && b > eps) {
          ok = false;
          break;
        }
      }
      if (ok) {
        out.pair.emplace(StateVector::normalized(u->col(j)), StateVector::normalized(u->col(k)));
        return out;
      }
    }
  return out;
}

// Moment-hierarchy lower bound b^T A^+ b on the Fisher information using the
// moments of w(x) up to order 2K. The values w are centred and scaled first,
// which leaves the bound unchanged but keeps A well conditioned.
inline FiReport moment_lower_bound(const RVec& p, const RVec& dp, int k, const RVec& w) {
  if (k < 1) throw std::invalid_argument("moment order K must be at least 1");
  require_dims(p.size() == dp.size() && p.size() == w.size(), "moment inputs differ in length");
  FiReport rep;
  rep.method = Method::moment_bound;
  rep.tolerance = 1.0 / tol.singular_cond;
  const double mean = p.dot(w);
  const double sd = std::sqrt(std::max(0.0, p.dot((w.array() - mean).square().matrix())));
  if (!(sd > 0.0)) {
    rep.value = 0.0;
    rep.note = "degenerate outcome values";
    return rep;
  }
  const RVec z = (w.array() - mean) / sd;
  const Index n = k + 1;
  RVec mom(2 * k + 1), dmom(k + 1);
  RVec zp = RVec::Ones(z.size());
  for (Index j = 0; j <= 2 * k; ++j) {
    mom[j] = p.dot(zp);
    if (j <= k) dmom[j] = dp.dot(zp);
    zp = zp.cwiseProduct(z);
  }
  RMat a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = mom[i + j];
  Eigen::SelfAdjointEigenSolver<RMat> es(a);
  const RVec ev = es.eigenvalues();
  const double emax = ev.cwiseAbs().maxCoeff();
  const double cut = emax / tol.singular_cond;
  if (ev.minCoeff() <= cut) rep.note = "moment matrix numerically singular; pseudo-inverse used";
  const RVec c = es.eigenvectors().transpose() * dmom;
  double v = 0.0;
  for (Index i = 0; i < n; ++i)
    if (ev[i] > cut) v += c[i] * c[i] / ev[i];
  rep.value = std::max(0.0, v);
  return rep;
}

}  // namespace metroq
