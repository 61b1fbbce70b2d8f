#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "metroq/fisher.hpp"

namespace metroq {

struct PhaseCovSet {
  bool dephasing = false;  // p = q: covariant for every angle
  std::vector<std::pair<double, double>> intervals;  // within [0, pi/2]
};

namespace detail {

inline bool phase_cov_ok(double eta, double delta, double phi) {
  const double s = std::sin(phi), c = std::cos(phi);
  if (!(std::abs(c) >= std::abs(delta))) return false;
  if (s == 0.0 || c == 0.0) return false;
  return 4 * eta * eta / (s * s) + delta * delta / (c * c) <= 1.0;
}

}  // namespace detail

// Angles (reduced to [0, pi/2] by the symmetries phi -> -phi, pi - phi) at
// which the bit-flip POVM admits a phase-covariant conjugate-map
// decomposition. Grid scan followed by bisection of each boundary.
inline std::optional<PhaseCovSet> phase_cov_feasible(double p, double q, int grid = 10000) {
  if (p < 0 || p > 1 || q < 0 || q > 1) throw std::invalid_argument("probabilities must lie in [0, 1]");
  const double eta = p + q - 1, delta = p - q;
  PhaseCovSet out;
  if (delta == 0.0) {
    out.dephasing = true;
    out.intervals.emplace_back(0.0, std::numbers::pi / 2);
    return out;
  }
  const double hi = std::numbers::pi / 2;
  auto ok = [&](double phi) { return detail::phase_cov_ok(eta, delta, phi); };
  auto refine = [&](double a, double b) {  // ok(a) != ok(b)
    const bool fa = ok(a);
    for (int it = 0; it < 100 && b - a > 1e-14; ++it) {
      const double m = 0.5 * (a + b);
      (ok(m) == fa ? a : b) = m;
    }
    return 0.5 * (a + b);
  };
  double start = -1.0;
  double prev_x = 0.0;
  bool prev = false;
  for (int i = 1; i < grid; ++i) {
    const double x = hi * i / grid;
    const bool cur = ok(x);
    if (cur && !prev) start = i == 1 ? x : refine(prev_x, x);
    if (!cur && prev) out.intervals.emplace_back(start, refine(prev_x, x));
    prev = cur;
    prev_x = x;
  }
  if (prev) out.intervals.emplace_back(start, prev_x);
  if (out.intervals.empty()) return std::nullopt;
  return out;
}

inline double phase_cov_qfi(double eta, double phi) {
  const double s = std::sin(phi);
  if (s == 0.0) throw std::domain_error("phase-covariant bound needs sin(phi) != 0");
  return eta * eta / (s * s);
}

// Tightest phase-covariant upper bound on the imperfect channel QFI.
inline std::optional<double> phase_cov_qfi_min(double p, double q) {
  auto set = phase_cov_feasible(p, q);
  if (!set) return std::nullopt;
  const double eta = p + q - 1;
  if (set->dephasing) return eta * eta;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : set->intervals) best = std::min(best, phase_cov_qfi(eta, b));
  return best;
}

// True if for every sampled g there is a unitary W_g with
// L(V_g rho V_g^dagger) = W_g L(rho) W_g^dagger, V_g = exp(i g G). W_g is
// found from the null space of the linear conditions W B_k = A_k W on the
// images of a matrix-unit basis, then projected to the nearest unitary.
inline bool check_g_covariance(const KrausSet& l, const CMat& generator, const std::vector<double>& samples,
                               double eps = 1e-8) {
  const Index din = l.input_dim(), dout = l.output_dim();
  require_dims(generator.rows() == din && generator.cols() == din, "group generator dimension");
  std::vector<CMat> imgs;
  std::vector<CMat> units;
  for (Index i = 0; i < din; ++i)
    for (Index j = 0; j < din; ++j) {
      CMat e = CMat::Zero(din, din);
      e(i, j) = 1.0;
      units.push_back(e);
      imgs.push_back(l.apply(e));
    }
  std::mt19937_64 rng(0xC0FFEE);
  std::normal_distribution<double> nd;
  for (double g : samples) {
    const CMat vg = expi_herm(generator, g);
    std::vector<CMat> rot;
    for (const auto& e : units) rot.push_back(l.apply(vg * e * vg.adjoint()));
    const Index n2 = dout * dout;
    CMat sys(static_cast<Index>(units.size()) * n2, n2);
    const CMat id = identity(dout);
    for (std::size_t k = 0; k < units.size(); ++k)
      sys.middleRows(static_cast<Index>(k) * n2, n2) = kron(imgs[k].transpose(), id) - kron(id, rot[k]);
    Eigen::JacobiSVD<CMat> svd(sys, Eigen::ComputeFullV);
    const RVec sv = svd.singularValues();
    const double scale = std::max(1.0, sv.size() ? sv[0] : 0.0);
    std::vector<CVec> null;
    for (Index i = 0; i < n2; ++i)
      if (i >= sv.size() || sv[i] < 1e-9 * scale) null.push_back(svd.matrixV().col(i));
    auto residual = [&](const CMat& w) {
      double r = 0.0;
      for (std::size_t k = 0; k < units.size(); ++k)
        r = std::max(r, (w * imgs[k] * w.adjoint() - rot[k]).cwiseAbs().maxCoeff());
      return r;
    };
    bool found = false;
    std::vector<CVec> trials = null;
    if (null.size() > 1)
      for (int t = 0; t < 4; ++t) {
        CVec c = CVec::Zero(n2);
        for (const auto& v : null) c += cplx(nd(rng), nd(rng)) * v;
        trials.push_back(c);
      }
    for (const auto& v : trials) {
      const CMat w = polar_unitary(Eigen::Map<const CMat>(v.data(), dout, dout));
      if (residual(w) < eps) {
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

inline CMat sld_solve(const CMat& rho, const CMat& drho) { return detail::sld(rho, drho).L; }

struct SeesawConfig {
  std::size_t max_iters = 500;
  double tol = 1e-9;
  int restarts = 8;
  std::uint64_t seed = 0x5ee5a3;
  unsigned threads = 1;
};

struct SeesawState {
  CMat sigma;  // input-state iterate
  CMat X;      // observable iterate
  double value = 0.0;
  std::vector<double> history;
};

struct SeesawReport {
  FiReport report;
  SeesawState best;
  std::vector<double> restart_values;
  bool restart_disagreement = false;
  bool monotone = true;  // every sweep was nondecreasing within 1e-10
};

namespace detail {

inline double channel_output_qfi(const KrausSet& l, const CMat& h, const CMat& sigma, CMat* sld_out = nullptr) {
  const CMat rho = l.apply(sigma);
  const CMat drho = l.apply(I * (h * sigma - sigma * h));
  auto r = sld(hermitian_part(rho), hermitian_part(drho));
  if (sld_out) *sld_out = r.L;
  return r.value;
}

inline SeesawState seesaw_run(const KrausSet& l, const CMat& h, CMat sigma, const SeesawConfig& cfg, bool& monotone) {
  SeesawState st;
  CMat x;
  double f = channel_output_qfi(l, h, sigma, &x);
  st.history.push_back(f);
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    // For fixed X the functional 2 Tr(rho' X) - Tr(rho X^2) is linear in the
    // input state with operator G below; its top eigenvector is the update.
    const CMat y = l.adjoint(x);
    const CMat g = I * (y * h - h * y) * 2.0 - l.adjoint(x * x);
    auto es = herm_eig(g);
    const CVec top = es.eigenvectors().col(es.eigenvectors().cols() - 1);
    CMat next = top * top.adjoint();
    CMat xn;
    const double fn = channel_output_qfi(l, h, next, &xn);
    if (fn < f - 1e-10 * std::max(1.0, f)) {
      monotone = false;
      break;
    }
    const bool small = fn - f <= cfg.tol * std::max(1.0, f);
    if (fn >= f) {
      sigma = next;
      x = xn;
      f = fn;
    }
    st.history.push_back(f);
    if (small) break;
  }
  st.sigma = sigma;
  st.X = x;
  st.value = f;
  return st;
}

inline CMat random_full_rank_state(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CMat a(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = cplx(nd(rng), nd(rng));
  CMat r = a * a.adjoint() + 1e-3 * identity(d);
  return r / r.trace().real();
}

}  // namespace detail

// Lower bound on the channel QFI of L composed with exp(i theta H), by
// alternating between the optimal observable and the optimal input state.
inline SeesawReport seesaw_channel_qfi(const CMat& h, const KrausSet& l, const SeesawConfig& cfg = {}) {
  require_dims(h.rows() == l.input_dim() && h.cols() == l.input_dim(), "generator and channel input differ");
  if (!is_hermitian(h)) throw invalid_object("generator is not Hermitian");
  const Index d = l.input_dim();
  struct Run {
    SeesawState st;
    bool monotone = true;
  };
  auto runs = parallel_map<Run>(
      static_cast<std::size_t>(std::max(1, cfg.restarts)),
      [&](std::size_t r) {
        std::mt19937_64 rng(derive_seed(cfg.seed, r));
        Run out;
        out.st = detail::seesaw_run(l, h, detail::random_full_rank_state(d, rng), cfg, out.monotone);
        return out;
      },
      cfg.threads);
  SeesawReport rep;
  rep.report.method = Method::seesaw;
  rep.report.tolerance = cfg.tol;
  double lo = std::numeric_limits<double>::infinity(), hi = -1.0;
  std::size_t arg = 0, iter = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    rep.restart_values.push_back(runs[r].st.value);
    rep.monotone = rep.monotone && runs[r].monotone;
    lo = std::min(lo, runs[r].st.value);
    if (runs[r].st.value > hi) {
      hi = runs[r].st.value;
      arg = r;
    }
  }
  rep.best = runs[arg].st;
  for (double v : rep.best.history) rep.report.trace.push_back({iter++, v});
  rep.report.value = std::max(0.0, hi);
  rep.report.converged = rep.best.history.size() <= cfg.max_iters;
  rep.restart_disagreement = hi - lo > 1e-6;
  if (rep.restart_disagreement) rep.report.note = "restarts disagree by more than 1e-6";
  return rep;
}

// Single-qubit dephasing channel with coherence factor eta.
inline KrausSet dephasing_channel(double eta) {
  if (eta < -1 || eta > 1) throw std::invalid_argument("dephasing factor must lie in [-1, 1]");
  return KrausSet({std::sqrt((1 + eta) / 2) * identity(2), std::sqrt((1 - eta) / 2) * pauli_z()});
}

inline KrausSet tensor_channel(const KrausSet& a, const KrausSet& b) {
  std::vector<CMat> ks;
  for (const auto& x : a.operators())
    for (const auto& y : b.operators()) ks.push_back(kron(x, y));
  return KrausSet(std::move(ks));
}

struct CovarianceAudit {
  double p = 0.0;
  double imperfect_qfi = 0.0;  // two-qubit imperfect channel QFI with global control
  double dephasing = 0.0;
  double qc = 0.0;
  double compact = 0.0;
  bool all_below = true;  // every decomposition value <= imperfect_qfi + 1e-6
};

// Two qubits with symmetric bit-flip readout in the |+>,|-> basis. The
// imperfect channel QFI with global control equals 4 gamma of the two-copy
// POVM; the seesaw evaluates the channel QFI of three decompositions.
inline CovarianceAudit two_qubit_covariance_audit(double p, const SeesawConfig& cfg = {},
                                                  const GammaOptions& gopt = {}) {
  CovarianceAudit a;
  a.p = p;
  const Povm m = bit_flip_povm(p, p);
  const Povm m2 = tensor_povm(m, 2);
  a.imperfect_qfi = 4.0 * gamma_coefficient(m2, gopt).value;
  const CMat h = kron(pauli_z() / 2.0, identity(2)) + kron(identity(2), pauli_z() / 2.0);
  const auto deph = dephasing_channel(2 * p - 1);
  a.dephasing = seesaw_channel_qfi(h, tensor_channel(deph, deph), cfg).report.value;
  const auto qc = conjugate_map_qc(m);
  a.qc = seesaw_channel_qfi(h, tensor_channel(qc, qc), cfg).report.value;
  const auto cp = conjugate_map_compact(m);
  a.compact = seesaw_channel_qfi(h, tensor_channel(cp, cp), cfg).report.value;
  a.all_below = a.dephasing <= a.imperfect_qfi + 1e-6 && a.qc <= a.imperfect_qfi + 1e-6 &&
                a.compact <= a.imperfect_qfi + 1e-6;
  return a;
}

}  // namespace metroq
