#pragma once

#include <gtest/gtest.h>

#include <random>

#include "metroq/metroq.hpp"

namespace metroq::testing {

// Column-stochastic matrix with strictly positive entries.
inline RMat random_stochastic(Index outcomes, Index inputs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  RMat p(outcomes, inputs);
  for (Index i = 0; i < outcomes; ++i)
    for (Index j = 0; j < inputs; ++j) p(i, j) = u(rng);
  for (Index j = 0; j < inputs; ++j) p.col(j) /= p.col(j).sum();
  return p;
}

// POVM with full-rank elements, normalised by the inverse square root of
// their sum.
inline Povm random_povm(Index d, Index outcomes, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<CMat> raw;
  CMat sum = CMat::Zero(d, d);
  for (Index x = 0; x < outcomes; ++x) {
    CMat a(d, d);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j) a(i, j) = cplx(nd(rng), nd(rng));
    CMat e = a.adjoint() * a + 0.05 * identity(d);
    raw.push_back(e);
    sum += e;
  }
  const CMat s = herm_func(sum, [](double v) { return 1.0 / std::sqrt(v); });
  std::vector<CMat> els;
  for (const auto& e : raw) els.push_back(hermitian_part(s * e * s));
  return Povm(els);
}

inline KrausSet random_channel(Index d, Index nk, std::mt19937_64& rng) {
  const CMat u = random_unitary(d * nk, rng);
  std::vector<CMat> ks;
  for (Index k = 0; k < nk; ++k) ks.push_back(u.block(k * d, 0, d, d));
  return KrausSet(ks);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline CVec equator(double phi) {
  CVec v(2);
  v << 1.0 / std::sqrt(2.0), std::exp(I * phi) / std::sqrt(2.0);
  return v;
}

}  // namespace metroq::testing
