#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "metroq/fisher.hpp"

namespace metroq {

using ZetaPair = OrthoPair;

struct GlobalBoundReport {
  int N = 0;
  double c = 1.0;
  double chi = 0.0;
  double f_lower = 0.0;
  std::optional<double> f_exact;
};

inline double hellinger_c(const Povm& m, const ZetaPair& pair) {
  require_dims(pair.dim() == m.dim(), "pair and POVM dimensions differ");
  const CVec& z = pair.xi().amplitudes();
  const CVec& zp = pair.xi_perp().amplitudes();
  double c = 0.0;
  for (const auto& e : m.elements()) {
    const double a = std::max(0.0, z.dot(e * z).real());
    const double b = std::max(0.0, zp.dot(e * zp).real());
    c += std::sqrt(a * b);
  }
  return std::clamp(c, 0.0, 1.0);
}

struct RateInfo {
  double chi = 0.0;
  bool infinite = false;
};

inline RateInfo convergence_rate(double c) {
  if (c < 0.0 || c > 1.0) throw std::invalid_argument("Hellinger overlap must lie in [0, 1]");
  if (c == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {-std::log(c), false};
}

// Per-probe rate from the Gaussian approximation of the two observed
// distributions: (mu+ - mu-)^2 / (4 (s+^2 + s-^2)).
inline double gaussian_rate(double mu_plus, double var_plus, double mu_minus, double var_minus) {
  const double den = 4.0 * (var_plus + var_minus);
  if (!(den > 0.0)) return std::numeric_limits<double>::infinity();
  return (mu_plus - mu_minus) * (mu_plus - mu_minus) / den;
}

// Same, with means and variances taken from distributions over outcome values.
inline double gaussian_rate(const RVec& p_plus, const RVec& p_minus, const RVec& values) {
  require_dims(p_plus.size() == values.size() && p_minus.size() == values.size(), "distribution lengths differ");
  const double mp = p_plus.dot(values), mm = p_minus.dot(values);
  const double vp = p_plus.dot(values.cwiseProduct(values)) - mp * mp;
  const double vm = p_minus.dot(values.cwiseProduct(values)) - mm * mm;
  return gaussian_rate(mp, vp, mm, vm);
}

inline double bitflip_rate_approx(double p, double q) {
  return gaussian_rate(p, p * (1 - p), 1 - q, q * (1 - q));
}

// Exact rate for two Poisson count distributions.
inline double poisson_rate(double lambda0, double lambda1) {
  const double d = std::sqrt(lambda0) - std::sqrt(lambda1);
  return 0.5 * d * d;
}

// Probes needed so that 1 - c^N reaches `fraction`.
inline double probes_for_fraction(double chi, double fraction) { return -std::log(1.0 - fraction) / chi; }

inline double bitflip_c(double p, double q) { return std::sqrt(p * (1 - q)) + std::sqrt(q * (1 - p)); }

inline GlobalBoundReport ghz_lower_bound(int N, double p, double q) {
  if (N < 1) throw std::invalid_argument("N must be positive");
  GlobalBoundReport r;
  r.N = N;
  r.c = std::min(1.0, bitflip_c(p, q));
  r.chi = convergence_rate(r.c).chi;
  r.f_lower = double(N) * N * (1.0 - std::pow(r.c, N));
  return r;
}

namespace detail {

inline double log_binom(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// log(a^(n-k) b^k) with log(0) = -inf.
inline double log_pow2(double a, double b, int n, int k) {
  auto lp = [](double x, int e) {
    if (e == 0) return 0.0;
    return x > 0 ? e * std::log(x) : -std::numeric_limits<double>::infinity();
  };
  return lp(a, n - k) + lp(b, k);
}

inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// Hamming-weight-reduced product distributions for the N-probe bit flip:
// la[k] = log P(k flips | all zeros), lb[k] = log P(k ones | all ones), lc = log C(N,k).
struct HammingLogs {
  std::vector<double> la, lb, lc;
};

inline HammingLogs hamming_logs(int N, double p, double q) {
  HammingLogs h;
  for (int k = 0; k <= N; ++k) {
    h.la.push_back(log_pow2(p, 1 - p, N, k));
    h.lb.push_back(log_pow2(1 - q, q, N, k));
    h.lc.push_back(log_binom(N, k));
  }
  return h;
}

}  // namespace detail

// Exact Fisher information of the GHZ protocol whose global control maps the
// signal space onto |0...0>, |1...1> before the noisy readout; varphi is the
// residual control phase inside that two-dimensional space.
inline double exact_fn_ghz(int N, double p, double q, double varphi = 0.0) {
  if (N < 1) throw std::invalid_argument("N must be positive");
  const auto h = detail::hamming_logs(N, p, q);
  const double s = std::sin(varphi), c = std::cos(varphi);
  const double lw_plus = std::log(0.5 * (1 + s)), lw_minus = std::log(0.5 * (1 - s));
  double f = 0.0;
  for (int k = 0; k <= N; ++k) {
    const double la = h.la[k], lb = h.lb[k];
    const double lden = detail::log_add(lw_plus + la, lw_minus + lb);
    if (lden == -std::numeric_limits<double>::infinity()) continue;
    // (a - b)^2 / den computed as exp(2 log|a - b| - log den).
    const double lmax = std::max(la, lb);
    if (lmax == -std::numeric_limits<double>::infinity()) continue;
    const double diff = std::abs(std::exp(la - lmax) - std::exp(lb - lmax));
    if (diff == 0.0) continue;
    const double ldiff = lmax + std::log(diff);
    f += std::exp(h.lc[k] + 2 * ldiff - lden);
  }
  return double(N) * N * c * c * 0.25 * f;
}

struct WernerReport {
  double value = 0.0;
  double eps_plus = 0.0;
  double eps_minus = 0.0;
  double c_pow_n = 1.0;
};

// Lower bound for the white-noise-admixed GHZ state with purity weight r.
inline WernerReport werner_lower_bound(int N, double p, double q, double r) {
  if (N < 1) throw std::invalid_argument("N must be positive");
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("mixing weight r must lie in (0, 1)");
  const auto h = detail::hamming_logs(N, p, q);
  const double a0 = 0.5 * (p + 1 - q);  // Tr M_1 / 2
  WernerReport w;
  const double lr = std::log(r), l1r = std::log(1 - r);
  for (int k = 0; k <= N; ++k) {
    const double lpp = detail::log_pow2(a0, 1 - a0, N, k);
    w.eps_plus += std::exp(h.lc[k] + std::min(lr + h.la[k], l1r + lpp));
    w.eps_minus += std::exp(h.lc[k] + std::min(lr + h.lb[k], l1r + lpp));
  }
  w.c_pow_n = std::pow(std::min(1.0, bitflip_c(p, q)), N);
  w.value = double(N) * N * std::max(0.0, r * (1 - w.c_pow_n) - w.eps_plus - w.eps_minus);
  return w;
}

// Exact Fisher information of the same protocol for the admixed state.
inline double werner_exact(int N, double p, double q, double r, double varphi = 0.0) {
  if (N < 1) throw std::invalid_argument("N must be positive");
  const auto h = detail::hamming_logs(N, p, q);
  const double a0 = 0.5 * (p + 1 - q);
  const double s = std::sin(varphi), c = std::cos(varphi);
  double f = 0.0;
  for (int k = 0; k <= N; ++k) {
    const double la = h.la[k], lb = h.lb[k];
    const double lmax = std::max(la, lb);
    if (lmax == -std::numeric_limits<double>::infinity()) continue;
    const double ea = std::exp(la - lmax), eb = std::exp(lb - lmax);
    const double sig = 0.5 * (1 + s) * ea + 0.5 * (1 - s) * eb;
    const double lden = detail::log_add(std::log(r) + lmax + std::log(std::max(sig, 0.0)),
                                        std::log(1 - r) + detail::log_pow2(a0, 1 - a0, N, k));
    const double diff = std::abs(ea - eb);
    if (diff == 0.0) continue;
    const double lnum = 2 * (std::log(r * 0.5 * N * std::abs(c)) + lmax + std::log(diff));
    f += std::exp(h.lc[k] + lnum - lden);
  }
  return f;
}

struct ZetaSearchResult {
  std::optional<ZetaPair> pair;
  double c = 1.0;
  Index j = 0, k = 1;
  bool supported = true;  // false for non-commuting POVMs
};

// Common-eigenbasis pair of a commuting POVM with the smallest Hellinger
// overlap.
inline ZetaSearchResult optimal_zeta_search(const Povm& m) {
  ZetaSearchResult out;
  auto u = common_eigenbasis(m);
  if (!u) {
    out.supported = false;
    return out;
  }
  // Prefer the eigenbasis closest to the computational one for readability.
  const Index d = m.dim();
  CMat basis = *u;
  bool diagonal = true;
  for (const auto& e : m.elements()) {
    CMat off = e;
    off.diagonal().setZero();
    if (off.cwiseAbs().maxCoeff() > 1e-12) diagonal = false;
  }
  if (diagonal) basis = identity(d);
  out.c = 2.0;
  for (Index j = 0; j < d; ++j)
    for (Index k = j + 1; k < d; ++k) {
      double c = 0.0;
      for (const auto& e : m.elements())
        c += std::sqrt(std::max(0.0, basis.col(j).dot(e * basis.col(j)).real() *
                                         basis.col(k).dot(e * basis.col(k)).real()));
      if (c < out.c - 1e-15) {
        out.c = c;
        out.j = j;
        out.k = k;
      }
    }
  out.c = std::clamp(out.c, 0.0, 1.0);
  out.pair.emplace(StateVector::normalized(basis.col(out.j)), StateVector::normalized(basis.col(out.k)));
  return out;
}

struct CatScan {
  double theta = 0.0;
  double objective = 0.0;
  std::vector<double> thetas;
  std::vector<double> values;
};

namespace detail {

// Calls fn(counts, log multinomial coefficient) for every composition of N
// into `parts` nonnegative counts.
template <class F>
void for_each_type(int N, int parts, F&& fn) {
  std::vector<int> n(static_cast<std::size_t>(parts), 0);
  const double lgn = std::lgamma(N + 1.0);
  auto rec = [&](auto&& self, int idx, int left) -> void {
    if (idx == parts - 1) {
      n[static_cast<std::size_t>(idx)] = left;
      double lm = lgn;
      for (int v : n) lm -= std::lgamma(v + 1.0);
      fn(n, lm);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      n[static_cast<std::size_t>(idx)] = v;
      self(self, idx + 1, left - v);
    }
  };
  rec(rec, 0, N);
}

}  // namespace detail

// Scans cat-state angles cos(t)|j..j> + sin(t)|k..k> for the Hellinger
// objective 1 - sum_x sqrt(p+(x) p-(x)) over the N-fold product outcomes.
// The first grid point attaining the maximum is returned.
inline CatScan cat_state_scan(const Povm& m, int N, const std::vector<double>& grid) {
  if (N < 1 || N > 12) throw capacity_exceeded("cat-state scan supports 1 <= N <= 12");
  if (grid.empty()) throw std::invalid_argument("angle grid must be nonempty");
  auto z = optimal_zeta_search(m);
  if (!z.supported) throw std::invalid_argument("cat-state scan needs a commuting POVM");
  const CVec& uj = z.pair->xi().amplitudes();
  const CVec& uk = z.pair->xi_perp().amplitudes();
  const int nx = static_cast<int>(m.outcomes());
  std::vector<double> pj(static_cast<std::size_t>(nx)), pk(static_cast<std::size_t>(nx));
  for (int x = 0; x < nx; ++x) {
    pj[static_cast<std::size_t>(x)] = std::max(0.0, uj.dot(m[static_cast<std::size_t>(x)] * uj).real());
    pk[static_cast<std::size_t>(x)] = std::max(0.0, uk.dot(m[static_cast<std::size_t>(x)] * uk).real());
  }
  // Collect (log multiplicity, log P_j^N, log P_k^N) per type class once.
  struct TypeTerm {
    double lm, lj, lk;
  };
  std::vector<TypeTerm> terms;
  detail::for_each_type(N, nx, [&](const std::vector<int>& n, double lm) {
    double lj = 0, lk = 0;
    for (int x = 0; x < nx; ++x) {
      const int e = n[static_cast<std::size_t>(x)];
      if (e == 0) continue;
      lj += pj[static_cast<std::size_t>(x)] > 0 ? e * std::log(pj[static_cast<std::size_t>(x)])
                                                 : -std::numeric_limits<double>::infinity();
      lk += pk[static_cast<std::size_t>(x)] > 0 ? e * std::log(pk[static_cast<std::size_t>(x)])
                                                 : -std::numeric_limits<double>::infinity();
    }
    terms.push_back({lm, lj, lk});
  });
  CatScan out;
  out.objective = -1.0;
  for (double t : grid) {
    const double c2 = std::cos(t) * std::cos(t), s2 = std::sin(t) * std::sin(t);
    double overlap = 0.0;
    for (const auto& tt : terms) {
      const double a = std::exp(tt.lj), b = std::exp(tt.lk);
      overlap += std::exp(tt.lm) * std::sqrt((c2 * a + s2 * b) * (s2 * a + c2 * b));
    }
    const double v = 1.0 - std::min(1.0, overlap);
    out.thetas.push_back(t);
    out.values.push_back(v);
    if (v > out.objective + 1e-12) {
      out.objective = v;
      out.theta = t;
    }
  }
  return out;
}

}  // namespace metroq
