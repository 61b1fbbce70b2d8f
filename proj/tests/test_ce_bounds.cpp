#include "support.hpp"

using namespace metroq;
using metroq::testing::uniform;

namespace {

const UnitaryEncoding& half_z() {
  static const UnitaryEncoding enc(pauli_z() / 2.0);
  return enc;
}

Povm photonic_readout(double eta, double pd) {
  return povm_from_detection(single_photon_channel(eta, pd), ProjectiveMeasurement::computational(2), hadamard());
}

double max_abs(const CMat& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(CanonicalKrausTest, TracePreservingExamples) {
  for (const auto& m : {bit_flip_povm(0.95, 0.9), ProjectiveMeasurement::computational(2).as_povm(),
                        photonic_readout(0.9, 0.1)}) {
    const auto k = canonical_kraus(m, half_z(), identity(2));
    const auto ops = k.operators();
    EXPECT_EQ(ops.size(), 2 * m.outcomes());
    CMat tp = CMat::Zero(2, 2);
    for (const auto& op : ops) tp += op.adjoint() * op;
    EXPECT_LT(max_abs(tp - identity(2)), 1e-10);
  }
}

TEST(CanonicalKrausTest, DerivativeMatchesFiniteDifference) {
  const auto m = bit_flip_povm(0.8, 0.7);
  const CMat v = expi_herm(pauli_y(), 0.3);
  const double t = 0.2, step = 1e-6;
  const auto k = canonical_kraus(m, UnitaryEncoding(pauli_z() / 2.0, t), v);
  const auto kp = canonical_kraus(m, UnitaryEncoding(pauli_z() / 2.0, t + step), v);
  const auto km = canonical_kraus(m, UnitaryEncoding(pauli_z() / 2.0, t - step), v);
  const auto d = k.derivatives(), op = kp.operators(), om = km.operators();
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_LT(max_abs(d[i] - (op[i] - om[i]) / (2 * step)), 1e-8);
}

TEST(AlphaBeta, ZeroGaugeOnProjectiveMeasurement) {
  // With dK = i K h and g = 0, beta = i sum (i K h)^dagger K = h.
  const auto k = canonical_kraus(ProjectiveMeasurement::computational(2).as_povm(), half_z(), identity(2));
  const auto [alpha, beta] = alpha_beta(k, GaugeGenerator::zero(4));
  EXPECT_LT(max_abs(beta - pauli_z() / 2.0), 1e-12);
  EXPECT_LT(max_abs(alpha - identity(2) / 4.0), 1e-12);
}

TEST(AlphaBeta, ZeroGeneratorGivesZeroBeta) {
  const auto k = canonical_kraus(bit_flip_povm(0.9, 0.8), UnitaryEncoding(CMat::Zero(2, 2)), identity(2));
  const auto [alpha, beta] = alpha_beta(k, GaugeGenerator::zero(4));
  EXPECT_LT(max_abs(beta), 1e-14);
  EXPECT_LT(max_abs(alpha), 1e-14);
  EXPECT_THROW(alpha_beta(k, GaugeGenerator::zero(3)), dimension_mismatch);
}

TEST(BetaZero, ConstructiveGauge) {
  const auto pi = ProjectiveMeasurement::from_basis(hadamard());
  for (auto [p, q] : {std::pair{0.95, 0.9}, std::pair{0.8, 0.8}, std::pair{0.6, 0.9}}) {
    const auto g = beta_zero_feasible(DetectionChannel::bit_flip(p, q), pi, half_z(), identity(2));
    ASSERT_TRUE(g.has_value()) << p << " " << q;
    const auto k = canonical_kraus(bit_flip_povm(p, q), half_z(), identity(2));
    EXPECT_LT(max_abs(alpha_beta(k, *g).second), 1e-10);
  }
  EXPECT_FALSE(beta_zero_feasible(DetectionChannel::identity(2), pi, half_z(), identity(2)).has_value());
}

TEST(ClosedForms, BitFlip) {
  EXPECT_NEAR(bitflip_ce_closed_form(0.95, 0.9), 2.69322, 1e-5);
  EXPECT_EQ(bitflip_ce_closed_form(0.8, 0.9), bitflip_ce_closed_form(0.9, 0.8));
  EXPECT_TRUE(std::isinf(bitflip_ce_closed_form(1.0, 1.0)));
  // The symmetric limit is the dephasing value eta^2 / (1 - eta^2).
  const double eta = 2 * 0.85 - 1;
  EXPECT_NEAR(bitflip_ce_closed_form(0.85, 0.85), eta * eta / (1 - eta * eta), 1e-12);
  EXPECT_NEAR(bitflip_ce_closed_form(0.85 + 1e-5, 0.85 - 1e-5), eta * eta / (1 - eta * eta), 1e-6);
}

TEST(ClosedForms, Photonic) {
  EXPECT_NEAR(photonic_ce_closed_form(0.9, 0.1), 3.7742, 1e-4);
  EXPECT_NEAR(photonic_ce_closed_form(0.7, 0.0), 0.7 / 0.3, 1e-12);
  EXPECT_NEAR(photonic_ce_closed_form(1.0, 0.2), 1 / 0.2 - 1, 1e-12);
  for (double eta : {0.55, 0.7, 0.9, 0.99})
    EXPECT_NEAR(photonic_ce_closed_form(eta, 0.0), photonic_ce_closed_form(1.0, 1 - eta), 1e-10);
  EXPECT_THROW(photonic_ce_closed_form(0.0, 0.1), std::invalid_argument);
  EXPECT_THROW(photonic_ce_closed_form(0.9, 0.5), std::invalid_argument);
}

TEST(AsymptoticCe, BitFlipExample) {
  const auto r = asymptotic_ce_bound(bit_flip_povm(0.95, 0.9), half_z(), identity(2));
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(4 * r.per_probe_c / bitflip_ce_closed_form(0.95, 0.9), 1.0, 1e-4);
  EXPECT_LE(r.dual_bound, r.per_probe_c + 1e-12);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.beta_norm, 1e-8);
  const auto k = canonical_kraus(bit_flip_povm(0.95, 0.9), half_z(), identity(2));
  EXPECT_LT(max_abs(alpha_beta(k, *r.g_opt).second), 1e-8);
  EXPECT_NEAR(asymptotic_ce_bound(bit_flip_povm(0.95, 0.9), half_z(), identity(2), {}, 7).bound_asymptotic,
              7 * 4 * r.per_probe_c, 1e-9);
}

TEST(AsymptoticCe, PhotonicExample) {
  const auto r = asymptotic_ce_bound(photonic_readout(0.9, 0.1), half_z(), identity(2));
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(4 * r.per_probe_c / photonic_ce_closed_form(0.9, 0.1), 1.0, 1e-3);
}

TEST(AsymptoticCe, PerfectMeasurementIsInfeasible) {
  const auto r = asymptotic_ce_bound(ProjectiveMeasurement::from_basis(hadamard()).as_povm(), half_z(), identity(2));
  EXPECT_FALSE(r.feasible);
  EXPECT_TRUE(std::isinf(r.bound_asymptotic));
}

TEST(AsymptoticCe, MatchesBitFlipClosedFormOnGrid) {
  const double ps[] = {0.6, 0.75, 0.9, 0.97};
  const double qs[] = {0.55, 0.7, 0.8, 0.88, 0.95};
  for (double p : ps)
    for (double q : qs) {
      const auto r = asymptotic_ce_bound(bit_flip_povm(p, q), half_z(), identity(2));
      EXPECT_NEAR(4 * r.per_probe_c / bitflip_ce_closed_form(p, q), 1.0, 1e-4) << p << " " << q;
    }
}

TEST(AsymptoticCe, MatchesPhotonicClosedFormOnGrid) {
  const double etas[] = {0.6, 0.8, 0.9, 0.95, 1.0};
  const double pds[] = {0.02, 0.15};
  for (double eta : etas)
    for (double pd : pds) {
      const auto r = asymptotic_ce_bound(photonic_readout(eta, pd), half_z(), identity(2));
      EXPECT_NEAR(4 * r.per_probe_c / photonic_ce_closed_form(eta, pd), 1.0, 1e-3) << eta << " " << pd;
    }
}

TEST(AsymptoticCe, IndependentOfPhaseControl) {
  const double ref = asymptotic_ce_bound(bit_flip_povm(0.95, 0.9), half_z(), identity(2)).per_probe_c;
  for (int i = 0; i < 10; ++i) {
    const CMat v = expi_herm(pauli_z(), 0.3 * i);
    EXPECT_NEAR(asymptotic_ce_bound(bit_flip_povm(0.95, 0.9), half_z(), v).per_probe_c, ref, 1e-6 * ref) << i;
  }
}

TEST(FiniteCe, SingleProbeNeedsNoBetaConstraint) {
  const auto m = bit_flip_povm(0.95, 0.9);
  const auto r = finite_ce_bound(m, half_z(), identity(2), 1);
  const auto k = canonical_kraus(m, half_z(), identity(2));
  // The trivial gauge gives 4 ||alpha(0)|| = 4 ||h^2|| = 1, the channel QFI.
  EXPECT_LE(r.bound_finite, 1.0 + 1e-9);
  EXPECT_NEAR(r.bound_finite, 4 * r.alpha_norm, 1e-9);
  EXPECT_GE(r.bound_finite, gamma_coefficient(m).value - 1e-6);
  EXPECT_THROW(finite_ce_bound(m, half_z(), identity(2), 0), std::invalid_argument);
  (void)k;
}

TEST(FiniteCe, BelowAsymptoticAndConverging) {
  const auto m = bit_flip_povm(0.95, 0.9);
  const double asym = 4 * asymptotic_ce_bound(m, half_z(), identity(2)).per_probe_c;
  for (int n : {1, 2, 5, 20, 100, 1000}) {
    const auto r = finite_ce_bound(m, half_z(), identity(2), n);
    EXPECT_LE(r.bound_finite, n * asym + 1e-8) << n;
    if (n == 1000) EXPECT_GT(r.bound_finite / (n * asym), 0.99);
  }
}

TEST(FiniteCe, PerfectMeasurementGrowsQuadratically) {
  const auto m = ProjectiveMeasurement::from_basis(hadamard()).as_povm();
  for (int n : {1, 4, 16, 64})
    EXPECT_NEAR(finite_ce_bound(m, half_z(), identity(2), n).bound_finite, double(n) * n, 1e-6 * n * n) << n;
}

TEST(CeProperties, FiniteBoundNeverBelowSingleProbeFisher) {
  // A single probe measured with the optimal control achieves gamma, which
  // every valid bound must dominate.
  std::mt19937_64 rng(97);
  for (int t = 0; t < 200; ++t) {
    const double p = uniform(rng, 0.55, 0.99), q = uniform(rng, 0.55, 0.99);
    const int n = 1 + t % 5;
    const auto r = finite_ce_bound(bit_flip_povm(p, q), half_z(), identity(2), n);
    EXPECT_GE(r.bound_finite + 1e-8, n * f2bin_bar(p, q).value) << p << " " << q << " " << n;
    EXPECT_LE(r.bound_finite, n * bitflip_ce_closed_form(p, q) * (1 + 1e-6) + 1e-8);
  }
}
