#include "support.hpp"

using namespace metroq;
using metroq::testing::random_stochastic;
using metroq::testing::uniform;

namespace {

Povm computational_bit_flip(double p, double q) {
  return povm_from_detection(DetectionChannel::bit_flip(p, q), ProjectiveMeasurement::computational(2));
}

ZetaPair basis_pair() { return ZetaPair(StateVector::basis(2, 0), StateVector::basis(2, 1)); }

}  // namespace

TEST(HellingerC, Examples) {
  EXPECT_NEAR(hellinger_c(ProjectiveMeasurement::computational(2).as_povm(), basis_pair()), 0.0, 1e-15);
  EXPECT_NEAR(hellinger_c(computational_bit_flip(0.95, 0.9), basis_pair()), 0.520353, 1e-6);
  EXPECT_NEAR(hellinger_c(Povm({0.3 * identity(2), 0.7 * identity(2)}), basis_pair()), 1.0, 1e-14);
}

TEST(ConvergenceRate, Examples) {
  EXPECT_NEAR(convergence_rate(0.520353).chi, 0.653248, 1e-6);
  EXPECT_TRUE(convergence_rate(0.0).infinite);
  EXPECT_EQ(convergence_rate(1.0).chi, 0.0);
  EXPECT_THROW(convergence_rate(1.5), std::invalid_argument);
  EXPECT_NEAR(bitflip_rate_approx(0.95, 0.9), 1.31364, 1e-5);
}

TEST(ConvergenceRate, GaussianRateFromDistributions) {
  RVec plus(2), minus(2), values(2);
  plus << 0.95, 0.05;
  minus << 0.1, 0.9;
  values << 1.0, 0.0;
  EXPECT_NEAR(gaussian_rate(plus, minus, values), bitflip_rate_approx(0.95, 0.9), 1e-14);
}

TEST(ConvergenceRate, PoissonRate) {
  // Half the squared difference of square roots; the probe count follows
  // from 1 - c^N = 0.95 with c = exp(-rate).
  const double rate = poisson_rate(0.1, 0.07);
  EXPECT_NEAR(rate, 0.0013340, 1e-7);
  const double n95 = probes_for_fraction(rate, 0.95);
  EXPECT_NEAR(n95, 2245.7, 0.5);
  EXPECT_NEAR(1 - std::exp(-rate * n95), 0.95, 1e-12);
}

TEST(GhzBound, Examples) {
  EXPECT_NEAR(ghz_lower_bound(10, 0.95, 0.9).f_lower, 99.854461, 1e-6);
  EXPECT_NEAR(ghz_lower_bound(7, 1.0, 1.0).f_lower, 49.0, 1e-12);
  EXPECT_THROW(ghz_lower_bound(0, 0.9, 0.9), std::invalid_argument);
  const auto r = ghz_lower_bound(10, 0.95, 0.9);
  EXPECT_NEAR(r.c, 0.520353, 1e-6);
  EXPECT_NEAR(r.chi, 0.653248, 1e-6);
}

TEST(GhzBound, ExactFisherInformationExamples) {
  const double e = exact_fn_ghz(10, 0.95, 0.9);
  EXPECT_GE(e, 99.854461);
  EXPECT_LE(e, 100.0);
  EXPECT_NEAR(exact_fn_ghz(9, 1.0, 1.0), 81.0, 1e-9);
  EXPECT_NEAR(exact_fn_ghz(9, 0.5, 0.5), 0.0, 1e-12);
}

// Independent oracle: enumerate all 2^N outcome strings of the product
// distribution without any Hamming-weight reduction.
TEST(GhzBound, ExactMatchesBruteEnumeration) {
  for (int n : {1, 3, 6, 9}) {
    for (double varphi : {0.0, 0.4}) {
      const double p = 0.9, q = 0.75;
      const double s = std::sin(varphi), c = std::cos(varphi);
      double f = 0.0;
      for (unsigned x = 0; x < (1u << n); ++x) {
        const int k = std::popcount(x);
        const double a = std::pow(p, n - k) * std::pow(1 - p, k);
        const double b = std::pow(1 - q, n - k) * std::pow(q, k);
        const double prob = 0.5 * (1 + s) * a + 0.5 * (1 - s) * b;
        const double dprob = 0.5 * n * c * (a - b);
        f += dprob * dprob / prob;
      }
      EXPECT_NEAR(exact_fn_ghz(n, p, q, varphi), f, 1e-9 * std::max(1.0, f)) << n << " " << varphi;
    }
  }
}

TEST(GhzBound, ConvergesMonotonically) {
  double prev = 0.0;
  for (int n = 1; n <= 40; ++n) {
    const double ratio = ghz_lower_bound(n, 0.95, 0.9).f_lower / (double(n) * n);
    EXPECT_GT(ratio, prev);
    prev = ratio;
  }
  EXPECT_GT(prev, 1 - 1e-10);
}

TEST(Werner, Examples) {
  const auto near_pure = werner_lower_bound(10, 0.95, 0.9, 1 - 1e-12);
  EXPECT_NEAR(near_pure.value, ghz_lower_bound(10, 0.95, 0.9).f_lower, 1e-6);
  EXPECT_EQ(werner_lower_bound(1, 0.95, 0.9, 0.7).value, 0.0);
  EXPECT_THROW(werner_lower_bound(5, 0.9, 0.9, 1.0), std::invalid_argument);
  EXPECT_THROW(werner_lower_bound(5, 0.9, 0.9, 0.0), std::invalid_argument);
}

TEST(Werner, ApproachesMixingWeight) {
  int n = 1;
  WernerReport w;
  for (; n <= 400; ++n) {
    w = werner_lower_bound(n, 0.95, 0.9, 0.7);
    if (w.c_pow_n < 1e-4 && w.eps_plus + w.eps_minus < 0.007) break;
  }
  ASSERT_LE(n, 400);
  const double ratio = w.value / (double(n) * n);
  EXPECT_GE(ratio, 0.69);
  EXPECT_LE(ratio, 0.70);
}

TEST(Werner, BoundBelowExact) {
  for (int n = 1; n <= 40; ++n)
    EXPECT_LE(werner_lower_bound(n, 0.95, 0.9, 0.7).value, werner_exact(n, 0.95, 0.9, 0.7) + 1e-8) << n;
}

TEST(Werner, ExactMatchesBruteEnumeration) {
  const double p = 0.92, q = 0.85, r = 0.6;
  const double a0 = 0.5 * (p + 1 - q);
  for (int n : {2, 5, 8}) {
    double f = 0.0;
    for (unsigned x = 0; x < (1u << n); ++x) {
      const int k = std::popcount(x);
      const double a = std::pow(p, n - k) * std::pow(1 - p, k);
      const double b = std::pow(1 - q, n - k) * std::pow(q, k);
      const double white = std::pow(a0, n - k) * std::pow(1 - a0, k);
      const double prob = r * 0.5 * (a + b) + (1 - r) * white;
      const double dprob = r * 0.5 * n * (a - b);
      f += dprob * dprob / prob;
    }
    EXPECT_NEAR(werner_exact(n, p, q, r), f, 1e-9 * f);
  }
}

TEST(ZetaSearch, Examples) {
  const auto bf = optimal_zeta_search(computational_bit_flip(0.95, 0.9));
  ASSERT_TRUE(bf.supported);
  EXPECT_EQ(bf.j, 0);
  EXPECT_EQ(bf.k, 1);
  EXPECT_NEAR(bf.c, 0.520353, 1e-6);

  RMat m(3, 3);
  m << 0.7, 0.3, 0.0, 0.3, 0.7, 0.0, 0.0, 0.0, 1.0;
  const auto three = optimal_zeta_search(povm_from_detection(DetectionChannel(m), ProjectiveMeasurement::computational(3)));
  EXPECT_NEAR(three.c, 0.0, 1e-14);
  EXPECT_EQ(three.k, 2);

  const auto erasing = optimal_zeta_search(Povm({0.5 * identity(2), 0.5 * identity(2)}));
  EXPECT_NEAR(erasing.c, 1.0, 1e-14);

  std::mt19937_64 rng(5);
  EXPECT_FALSE(optimal_zeta_search(metroq::testing::random_povm(2, 3, rng)).supported);
}

TEST(ZetaSearch, PoissonReadoutPicksBasisStates) {
  const auto p = poisson_detection_channel(PoissonReadout{});
  const auto z = optimal_zeta_search(povm_from_detection(p, ProjectiveMeasurement::computational(2)));
  EXPECT_EQ(z.j, 0);
  EXPECT_EQ(z.k, 1);
  EXPECT_NEAR(z.c, std::exp(-poisson_rate(27.0, 17.55)), 1e-8);
}

TEST(CatScan, SymmetricNoise) {
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(std::numbers::pi / 2 * i / 40.0);
  const auto scan = cat_state_scan(computational_bit_flip(0.9, 0.9), 4, grid);
  // Equal-weight cat states make the pair indistinguishable, so the scan
  // peaks at the basis-state end of the grid.
  EXPECT_NEAR(scan.values[20], 0.0, 1e-12);
  EXPECT_EQ(scan.theta, 0.0);
  EXPECT_NEAR(scan.objective, 1 - std::pow(bitflip_c(0.9, 0.9), 4), 1e-12);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(scan.values[i], scan.values[grid.size() - 1 - i], 1e-12);
}

// Once the two branch distributions stop overlapping, the pair differs only
// through its branch weights and the objective tends to 1 - sin(2 t).
TEST(CatScan, ManyProbeLimit) {
  std::vector<double> grid = {0.0, 0.2, 0.4, 0.6, 0.785};
  const auto scan = cat_state_scan(computational_bit_flip(0.99, 0.98), 12, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(scan.values[i], 1 - std::sin(2 * grid[i]), 1e-5);
  EXPECT_EQ(scan.theta, 0.0);
}

TEST(CatScan, ErasingReadoutGivesZero) {
  const auto scan = cat_state_scan(Povm({0.5 * identity(2), 0.5 * identity(2)}), 5, {0.0, 0.3, 0.7});
  for (double v : scan.values) EXPECT_NEAR(v, 0.0, 1e-12);
  EXPECT_THROW(cat_state_scan(computational_bit_flip(0.9, 0.9), 13, {0.0}), capacity_exceeded);
}

TEST(GlobalProperties, Sandwich) {
  std::mt19937_64 rng(83);
  for (int t = 0; t < 300; ++t) {
    const double p = uniform(rng, 0.5, 1.0), q = uniform(rng, 0.5, 1.0);
    const int n = 1 + t % 80;
    const double lo = ghz_lower_bound(n, p, q).f_lower, ex = exact_fn_ghz(n, p, q);
    EXPECT_LE(lo, ex + 1e-8 * n * n) << p << " " << q << " " << n;
    EXPECT_LE(ex, double(n) * n * (1 + 1e-12));
  }
}

TEST(GlobalProperties, HellingerMatchesSearchOnCommutingReadouts) {
  std::mt19937_64 rng(89);
  for (int t = 0; t < 200; ++t) {
    const Index d = 2 + t % 3;
    const auto m = povm_from_detection(DetectionChannel(random_stochastic(2 + t % 4, d, rng)),
                                       ProjectiveMeasurement::computational(d));
    const auto z = optimal_zeta_search(m);
    ASSERT_TRUE(z.supported);
    EXPECT_NEAR(hellinger_c(m, *z.pair), z.c, 1e-12);
    for (Index j = 0; j < d; ++j)
      for (Index k = j + 1; k < d; ++k)
        EXPECT_LE(z.c, hellinger_c(m, ZetaPair(StateVector::basis(d, j), StateVector::basis(d, k))) + 1e-12);
  }
}
