#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "metroq/fisher.hpp"

namespace metroq {

// Stochastic map from an input label (photon number j in the first arm, or a
// single dummy input) to detector counts (x1, x2), stored sparsely.
class CountChannel {
 public:
  using Key = std::pair<int, int>;
  using Column = std::map<Key, double>;

  CountChannel(int n, std::vector<Column> columns) : n_(n), cols_(std::move(columns)) {
    if (n < 0) throw std::invalid_argument("photon number must be non-negative");
    if (cols_.empty()) throw invalid_object("count channel has no inputs");
    for (const auto& c : cols_) {
      double s = 0.0;
      for (const auto& [k, v] : c) {
        if (!(v >= 0.0)) throw invalid_object("count probabilities must be non-negative");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-10) throw invalid_object("count channel column does not sum to one");
    }
  }

  int photons() const { return n_; }
  std::size_t inputs() const { return cols_.size(); }
  const Column& column(std::size_t j) const { return cols_.at(j); }
  double operator()(int x1, int x2, std::size_t j) const {
    const auto& c = cols_.at(j);
    auto it = c.find({x1, x2});
    return it == c.end() ? 0.0 : it->second;
  }

  // Dense detection channel over the union of supported outcomes, in key order.
  DetectionChannel to_detection_channel() const {
    std::map<Key, Index> rows;
    for (const auto& c : cols_)
      for (const auto& [k, v] : c) rows.emplace(k, 0);
    Index r = 0;
    for (auto& [k, idx] : rows) idx = r++;
    RMat p = RMat::Zero(r, static_cast<Index>(cols_.size()));
    for (std::size_t j = 0; j < cols_.size(); ++j)
      for (const auto& [k, v] : cols_[j]) p(rows[k], static_cast<Index>(j)) = v;
    return DetectionChannel(p);
  }

 private:
  int n_;
  std::vector<Column> cols_;
};

namespace detail {

inline RVec binomial_pmf(int n, double r) {
  RVec out = RVec::Zero(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double lc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    const double a = k == 0 ? 1.0 : std::pow(r, k);
    const double b = k == n ? 1.0 : std::pow(1 - r, n - k);
    out(k) = std::exp(lc) * a * b;
  }
  return out;
}

inline void check_rate(double r, const char* what) {
  if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument(what);
}

// Counts registered in one arm holding k photons when N photons enter the
// interferometer: binomial loss convolved with binomial dark counts.
inline RVec arm_counts(double eta, double pd, int k, int n) {
  const RVec loss = binomial_pmf(k, eta), dark = binomial_pmf(n, pd);
  RVec out = RVec::Zero(k + n + 1);
  for (int m = 0; m <= k; ++m)
    for (int y = 0; y <= n; ++y) out(m + y) += loss(m) * dark(y);
  return out;
}

}  // namespace detail

inline CountChannel loss_channel(double eta, int n) {
  detail::check_rate(eta, "detection efficiency must lie in [0, 1]");
  std::vector<CountChannel::Column> cols;
  for (int j = 0; j <= n; ++j) {
    const RVec a = detail::binomial_pmf(j, eta), b = detail::binomial_pmf(n - j, eta);
    CountChannel::Column c;
    for (int x1 = 0; x1 <= j; ++x1)
      for (int x2 = 0; x2 <= n - j; ++x2)
        if (a(x1) * b(x2) > 0.0) c[{x1, x2}] = a(x1) * b(x2);
    cols.push_back(std::move(c));
  }
  return CountChannel(n, std::move(cols));
}

inline CountChannel dark_channel(double pd, int n) {
  detail::check_rate(pd, "dark-count rate must lie in [0, 1]");
  const RVec a = detail::binomial_pmf(n, pd);
  CountChannel::Column c;
  for (int y1 = 0; y1 <= n; ++y1)
    for (int y2 = 0; y2 <= n; ++y2)
      if (a(y1) * a(y2) > 0.0) c[{y1, y2}] = a(y1) * a(y2);
  return CountChannel(n, {std::move(c)});
}

inline CountChannel compose_loss_dark(double eta, double pd, int n) {
  detail::check_rate(eta, "detection efficiency must lie in [0, 1]");
  detail::check_rate(pd, "dark-count rate must lie in [0, 1]");
  std::vector<CountChannel::Column> cols;
  for (int j = 0; j <= n; ++j) {
    const RVec a = detail::arm_counts(eta, pd, j, n), b = detail::arm_counts(eta, pd, n - j, n);
    CountChannel::Column c;
    for (Index x1 = 0; x1 < a.size(); ++x1)
      for (Index x2 = 0; x2 < b.size(); ++x2)
        if (a(x1) * b(x2) > 0.0) c[{static_cast<int>(x1), static_cast<int>(x2)}] = a(x1) * b(x2);
    cols.push_back(std::move(c));
  }
  return CountChannel(n, std::move(cols));
}

// gamma of the N-photon readout for the pair sin v|N,0> + cos v|0,N> and
// cos v|N,0> - sin v|0,N>. Terms with a vanishing denominator are taken as
// their limit in v.
inline double gamma_photonic(double eta, double pd, int n, double varphi) {
  if (n < 1) throw std::invalid_argument("photon number must be positive");
  detail::check_rate(eta, "detection efficiency must lie in [0, 1]");
  detail::check_rate(pd, "dark-count rate must lie in [0, 1]");
  const RVec full = detail::arm_counts(eta, pd, n, n), empty = detail::arm_counts(eta, pd, 0, n);
  const double s = std::sin(varphi), c = std::cos(varphi);
  const double s2 = s * s, c2 = c * c;
  double g = 0.0;
  for (Index x1 = 0; x1 < full.size(); ++x1) {
    for (Index x2 = 0; x2 < full.size(); ++x2) {
      const double a = full(x1) * (x2 < empty.size() ? empty(x2) : 0.0);
      const double b = (x1 < empty.size() ? empty(x1) : 0.0) * full(x2);
      const double den = s2 * a + c2 * b;
      if (den > 0.0) {
        g += s2 * c2 * (a - b) * (a - b) / den;
      } else if (s2 == 0.0 && b == 0.0) {
        g += c2 * a;
      } else if (c2 == 0.0 && a == 0.0) {
        g += s2 * b;
      }
    }
  }
  return g;
}

struct PhotonicOptimum {
  double gamma = 0.0;
  double varphi = 0.0;
};

inline PhotonicOptimum gamma_photonic_opt(double eta, double pd, int n, int grid = 90) {
  auto r = maximize_scalar([&](double v) { return gamma_photonic(eta, pd, n, v); }, 0.0, std::numbers::pi / 2, grid);
  return {r.f, r.x};
}

inline double noon_fi(int n, double eta) {
  detail::check_rate(eta, "detection efficiency must lie in [0, 1]");
  return double(n) * n * (1.0 - std::pow(1.0 - eta, n));
}

// Dual-rail single-photon readout with at most one dark count per photon.
// Rows: (2,0), (0,2), (1,1), (0,0), (1,0), (0,1).
inline DetectionChannel single_photon_channel(double eta, double pd) {
  detail::check_rate(eta, "detection efficiency must lie in [0, 1]");
  detail::check_rate(pd, "dark-count rate must lie in [0, 1]");
  RMat p(6, 2);
  const double pe = pd * eta;
  const double none = 1 - 2 * pd - eta + 2 * pe;
  p << pe, 0, 0, pe, pe, pe, none, none, pd + eta - 3 * pe, pd - pe, pd - pe, pd + eta - 3 * pe;
  if ((p.array() < -1e-15).any()) throw std::invalid_argument("dark-count rate too large for the single-count model");
  return DetectionChannel(p.cwiseMax(0.0));
}

// Diagonal POVM on the (N+1)-dimensional Fock sector |j, N-j>.
inline Povm photonic_povm(const CountChannel& ch) {
  return povm_from_detection(ch.to_detection_channel(),
                             ProjectiveMeasurement::computational(static_cast<Index>(ch.inputs())));
}

}  // namespace metroq
