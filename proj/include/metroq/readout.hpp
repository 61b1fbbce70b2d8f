#pragma once

#include <boost/math/distributions/poisson.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "metroq/fisher.hpp"

namespace metroq {

// Photon-count readout: |0> yields Poisson(lambda0) counts, |1> yields
// Poisson(lambda1); counts above the cutoff are discarded.
struct PoissonReadout {
  double lambda0 = 27.0;
  double lambda1 = 17.55;
  int cutoff = 100;
  double tail_tol = tol.tail_mass;

  double tail_mass() const {
    using boost::math::poisson_distribution;
    const double c = static_cast<double>(cutoff);
    return std::max(cdf(complement(poisson_distribution<double>(lambda0), c)),
                    cdf(complement(poisson_distribution<double>(lambda1), c)));
  }

  void validate() const {
    if (!(lambda0 > 0.0) || !(lambda1 > 0.0)) throw std::invalid_argument("Poisson means must be positive");
    if (cutoff < 1) throw std::invalid_argument("count cutoff must be positive");
    if (tail_mass() > tail_tol) throw std::invalid_argument("Poisson tail mass beyond the cutoff exceeds tolerance");
  }
};

struct BinningScheme {
  std::vector<int> boundaries;  // strictly increasing; bin edges x <= b
};

inline DetectionChannel poisson_detection_channel(const PoissonReadout& r) {
  r.validate();
  RMat p(r.cutoff + 1, 2);
  const double lam[2] = {r.lambda0, r.lambda1};
  for (int col = 0; col < 2; ++col) {
    boost::math::poisson_distribution<double> pd(lam[col]);
    for (int x = 0; x <= r.cutoff; ++x) p(x, col) = pdf(pd, static_cast<double>(x));
    p.col(col) /= p.col(col).sum();
  }
  return DetectionChannel(p);
}

// Outcome distribution and derivative for an equatorial qubit probe measured
// at relative angle phi through a two-input detection channel.
inline std::pair<RVec, RVec> nv_distribution(const DetectionChannel& p, double phi) {
  require_dims(p.inputs() == 2, "channel must have two ideal outcomes");
  const RVec p1 = p.matrix().col(0), p2 = p.matrix().col(1);
  const double s = std::sin(phi), c = std::cos(phi);
  RVec q = 0.5 * (1.0 + s) * p1 + 0.5 * (1.0 - s) * p2;
  RVec dq = 0.5 * c * (p1 - p2);
  return {q, dq};
}

inline double nv_fi(const DetectionChannel& p, double phi) {
  auto [q, dq] = nv_distribution(p, phi);
  return classical_fi(q, dq);
}

inline double nv_exact_fi(const PoissonReadout& r, double phi) { return nv_fi(poisson_detection_channel(r), phi); }

struct AngleOptimum {
  double value = 0.0;
  double phi = 0.0;
};

// max over phi in [-pi/2, pi/2] of nv_fi.
inline AngleOptimum max_over_phi(const DetectionChannel& p) {
  const double h = std::numbers::pi / 2;
  auto r = maximize_scalar([&](double phi) { return nv_fi(p, phi); }, -h, h, 96);
  return {r.f, r.x};
}

// Sums observed outcomes into bins. Rows of the result run from the
// highest-count bin down, so for two bins row 0 collects x > b.
inline DetectionChannel bin_channel(const DetectionChannel& p, const BinningScheme& s) {
  const int nx = static_cast<int>(p.outcomes());
  int prev = -1;
  for (int b : s.boundaries) {
    if (b <= prev || b < 0 || b > nx - 2) throw std::invalid_argument("invalid binning boundaries");
    prev = b;
  }
  const int k = static_cast<int>(s.boundaries.size()) + 1;
  RMat out = RMat::Zero(k, p.inputs());
  for (int x = 0; x < nx; ++x) {
    int bin = 0;
    while (bin < k - 1 && x > s.boundaries[static_cast<std::size_t>(bin)]) ++bin;
    out.row(k - 1 - bin) += p.matrix().row(x);
  }
  for (Index i = 0; i < out.cols(); ++i) out.col(i) /= out.col(i).sum();
  return DetectionChannel(out);
}

inline double f2bin_star(double eta, double delta, double phi) {
  const double t = delta + eta * std::sin(phi);
  const double den = 1.0 - t * t;
  if (den < 1e-14) throw std::domain_error("two-bin Fisher information denominator vanishes");
  const double c = std::cos(phi);
  return eta * eta * c * c / den;
}

struct TwoBinOptimum {
  double value = 0.0;
  double sin_phi = 0.0;  // sine of the optimal measurement angle
};

inline TwoBinOptimum f2bin_bar(double p, double q) {
  if (p < 0 || p > 1 || q < 0 || q > 1) throw std::invalid_argument("probabilities must lie in [0, 1]");
  const double s = std::sqrt(p * (1 - q)) + std::sqrt(q * (1 - p));
  TwoBinOptimum out;
  out.value = 1.0 - s * s;
  const double eta = p + q - 1, delta = p - q;
  const double a = 1 - delta * delta - eta * eta;
  if (std::abs(delta * eta) < 1e-300) {
    out.sin_phi = 0.0;  // the delta -> 0 limit
  } else {
    const double disc = std::max(0.0, a * a - 4 * delta * delta * eta * eta);
    out.sin_phi = (a - std::sqrt(disc)) / (2 * delta * eta);
  }
  return out;
}

struct BinningOptimum {
  BinningScheme scheme;
  double value = 0.0;
  double phi = 0.0;
};

// Exhaustive search over boundaries for k = 2..4 bins.
inline BinningOptimum optimize_binning(const DetectionChannel& p, int k) {
  if (k < 2) throw std::invalid_argument("at least two bins are required");
  if (k > 4) throw capacity_exceeded("exhaustive binning search is capped at four bins");
  const int nx = static_cast<int>(p.outcomes());
  const RMat& m = p.matrix();
  // Cumulative sums make every binned channel an O(k) computation.
  RMat cum = RMat::Zero(nx + 1, 2);
  for (int x = 0; x < nx; ++x) cum.row(x + 1) = cum.row(x) + m.row(x);
  BinningOptimum best;
  best.value = -1.0;
  std::vector<int> b(static_cast<std::size_t>(k - 1));
  auto evaluate = [&] {
    RMat bins(k, 2);
    int lo = 0;
    for (int j = 0; j < k; ++j) {
      const int hi = j < k - 1 ? b[static_cast<std::size_t>(j)] + 1 : nx;
      bins.row(k - 1 - j) = cum.row(hi) - cum.row(lo);
      lo = hi;
    }
    for (Index i = 0; i < 2; ++i) bins.col(i) /= bins.col(i).sum();
    const auto opt = max_over_phi(DetectionChannel(bins));
    if (opt.value > best.value) {
      best.value = opt.value;
      best.phi = opt.phi;
      best.scheme.boundaries = b;
    }
  };
  // Enumerate strictly increasing tuples in [0, nx - 1).
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<int>(i);
  for (;;) {
    evaluate();
    int j = k - 2;
    while (j >= 0 && b[static_cast<std::size_t>(j)] == nx - 2 - (k - 2 - j)) --j;
    if (j < 0) break;
    ++b[static_cast<std::size_t>(j)];
    for (int t = j + 1; t < k - 1; ++t) b[static_cast<std::size_t>(t)] = b[static_cast<std::size_t>(t - 1)] + 1;
  }
  return best;
}

inline BinningOptimum optimize_binning(const PoissonReadout& r, int k) {
  return optimize_binning(poisson_detection_channel(r), k);
}

// Real count at which the two Poisson mass functions are equal.
inline double poisson_crossing(const PoissonReadout& r) {
  if (r.lambda0 == r.lambda1) throw std::invalid_argument("identical Poisson means never cross");
  return (r.lambda0 - r.lambda1) / std::log(r.lambda0 / r.lambda1);
}

}  // namespace metroq
