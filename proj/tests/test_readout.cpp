#include "support.hpp"

using namespace metroq;
using metroq::testing::random_stochastic;
using metroq::testing::uniform;

namespace {

PoissonReadout readout(double lambda0) {
  PoissonReadout r;
  r.lambda0 = lambda0;
  r.lambda1 = 0.65 * lambda0;
  r.tail_tol = 1e-9;
  return r;
}

}  // namespace

TEST(PoissonReadoutTest, ChannelIsNormalised) {
  const auto p = poisson_detection_channel(PoissonReadout{});
  EXPECT_EQ(p.outcomes(), 101u);
  EXPECT_NEAR(p.matrix().col(0).sum(), 1.0, 1e-14);
  EXPECT_NEAR(p.matrix().col(1).sum(), 1.0, 1e-14);
}

TEST(PoissonReadoutTest, RejectsTooSmallCutoff) {
  PoissonReadout r;
  r.cutoff = 30;
  EXPECT_THROW(poisson_detection_channel(r), std::invalid_argument);
  r = PoissonReadout{};
  r.lambda1 = 0.0;
  EXPECT_THROW(poisson_detection_channel(r), std::invalid_argument);
}

// Reference values come from an independent NumPy/SciPy computation of the
// truncated, renormalised Poisson model.
TEST(NvReadout, ExactFisherInformation) {
  EXPECT_NEAR(max_over_phi(poisson_detection_channel(readout(27))).value, 0.55527, 5e-5);
  EXPECT_NEAR(max_over_phi(poisson_detection_channel(readout(50))).value, 0.75059, 5e-5);
}

TEST(NvReadout, TwoBinThreshold) {
  const auto full = max_over_phi(poisson_detection_channel(readout(27))).value;
  const auto two = optimize_binning(readout(27), 2);
  ASSERT_EQ(two.scheme.boundaries.size(), 1u);
  EXPECT_EQ(two.scheme.boundaries[0], 22);
  EXPECT_NEAR(two.value / full, 0.8509, 1e-3);
  EXPECT_LE(std::abs(two.scheme.boundaries[0] - poisson_crossing(readout(27))), 2.0);

  const auto full50 = max_over_phi(poisson_detection_channel(readout(50))).value;
  const auto two50 = optimize_binning(readout(50), 2);
  EXPECT_EQ(two50.scheme.boundaries[0], 40);
  EXPECT_NEAR(two50.value / full50, 0.9178, 1e-3);
}

TEST(NvReadout, ThreeBinsRecoverMore) {
  const auto full = max_over_phi(poisson_detection_channel(readout(27))).value;
  const auto three = optimize_binning(readout(27), 3);
  EXPECT_NEAR(three.value / full, 0.9404, 1e-3);
  EXPECT_GE(three.value, optimize_binning(readout(27), 2).value);
  EXPECT_LE(three.value, full + 1e-12);

  const auto full50 = max_over_phi(poisson_detection_channel(readout(50))).value;
  EXPECT_NEAR(optimize_binning(readout(50), 3).value / full50, 0.9687, 1e-3);
}

TEST(NvReadout, CrossingPoint) {
  EXPECT_NEAR(poisson_crossing(PoissonReadout{}), 21.94, 5e-3);
  PoissonReadout same;
  same.lambda1 = same.lambda0;
  EXPECT_THROW(poisson_crossing(same), std::invalid_argument);
}

TEST(BinChannel, Examples) {
  RMat m(4, 2);
  m << 0.1, 0.4, 0.2, 0.3, 0.3, 0.2, 0.4, 0.1;
  const DetectionChannel p(m);
  const auto two = bin_channel(p, {{1}});
  EXPECT_NEAR(two(0, 0), 0.7, 1e-14);
  EXPECT_NEAR(two(1, 0), 0.3, 1e-14);
  EXPECT_NEAR(two(0, 1), 0.3, 1e-14);

  const auto three = bin_channel(p, {{0, 2}});
  EXPECT_NEAR(three(0, 0), 0.4, 1e-14);
  EXPECT_NEAR(three(1, 0), 0.5, 1e-14);
  EXPECT_NEAR(three(2, 0), 0.1, 1e-14);

  EXPECT_THROW(bin_channel(p, {{2, 1}}), std::invalid_argument);
  EXPECT_THROW(bin_channel(p, {{3}}), std::invalid_argument);
}

TEST(TwoBin, Examples) {
  EXPECT_NEAR(f2bin_star(1.0, 0.0, 0.0), 1.0, 1e-14);
  EXPECT_NEAR(f2bin_star(0.8, 0.0, 0.0), 0.64, 1e-14);
  EXPECT_THROW(f2bin_star(1.0, 0.0, std::numbers::pi / 2), std::domain_error);

  const auto sym = f2bin_bar(0.9, 0.9);
  EXPECT_NEAR(sym.value, 0.64, 1e-14);
  EXPECT_NEAR(sym.sin_phi, 0.0, 1e-14);

  const auto asym = f2bin_bar(0.95, 0.9);
  EXPECT_NEAR(asym.value, 0.729233, 1e-6);
  EXPECT_NEAR(f2bin_star(0.85, 0.05, std::asin(asym.sin_phi)), asym.value, 1e-12);
  EXPECT_THROW(f2bin_bar(1.2, 0.5), std::invalid_argument);
}

TEST(TwoBin, OptimalAngleMaximisesOnAGrid) {
  std::mt19937_64 rng(61);
  for (int t = 0; t < 200; ++t) {
    const double p = uniform(rng, 0.05, 0.95), q = uniform(rng, 0.05, 0.95);
    const double eta = p + q - 1, delta = p - q;
    const auto opt = f2bin_bar(p, q);
    double grid = 0.0;
    for (int i = 1; i < 2000; ++i) grid = std::max(grid, f2bin_star(eta, delta, -1.5707 + 3.1414 * i / 2000.0));
    EXPECT_GE(opt.value, grid - 1e-10);
    EXPECT_NEAR(opt.value, grid, 1e-4);
  }
}

TEST(TwoBin, MatchesGammaOfTheQubitReadout) {
  std::mt19937_64 rng(67);
  GammaOptions opt;
  opt.restarts = 4;
  for (int t = 0; t < 50; ++t) {
    const double p = uniform(rng, 0.05, 0.95), q = uniform(rng, 0.05, 0.95);
    EXPECT_NEAR(f2bin_bar(p, q).value, gamma_coefficient(bit_flip_povm(p, q), opt).value, 1e-6);
  }
}

TEST(Binning, CapacityAndArguments) {
  const auto p = DetectionChannel::identity(3);
  EXPECT_THROW(optimize_binning(p, 5), capacity_exceeded);
  EXPECT_THROW(optimize_binning(p, 1), std::invalid_argument);
}

TEST(ReadoutProperties, BinningNeverIncreasesFisherInformation) {
  std::mt19937_64 rng(71);
  for (int t = 0; t < 200; ++t) {
    const Index nx = 3 + t % 6;
    const DetectionChannel p(random_stochastic(nx, 2, rng));
    std::uniform_int_distribution<int> pick(0, static_cast<int>(nx) - 2);
    const int b = pick(rng);
    const auto binned = bin_channel(p, {{b}});
    const double phi = uniform(rng, -1.5, 1.5);
    EXPECT_LE(nv_fi(binned, phi), nv_fi(p, phi) + 1e-12);
    EXPECT_LE(max_over_phi(binned).value, max_over_phi(p).value + 1e-10);
  }
}

TEST(ReadoutProperties, MomentHierarchyOnPoissonModels) {
  std::mt19937_64 rng(73);
  for (int t = 0; t < 200; ++t) {
    PoissonReadout r;
    r.lambda0 = uniform(rng, 5.0, 40.0);
    r.lambda1 = r.lambda0 * uniform(rng, 0.3, 0.9);
    const auto p = poisson_detection_channel(r);
    const double phi = uniform(rng, -1.2, 1.2);
    auto [q, dq] = nv_distribution(p, phi);
    RVec w(q.size());
    for (Index x = 0; x < w.size(); ++x) w[x] = (double(x) - r.lambda0) / r.lambda0;
    double prev = 0.0;
    for (int k = 1; k <= 3; ++k) {
      const double v = moment_lower_bound(q, dq, k, w).value;
      EXPECT_GE(v, prev - 1e-9) << "order " << k;
      prev = v;
    }
    EXPECT_LE(prev, classical_fi(q, dq) + 1e-9);
  }
}
