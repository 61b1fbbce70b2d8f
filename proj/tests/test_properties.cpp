#include "support.hpp"

using namespace metroq;
using metroq::testing::random_povm;
using metroq::testing::random_stochastic;

namespace {

// Post-processing a POVM by a stochastic matrix: N_y = sum_x P(y|x) M_x.
Povm post_process(const Povm& m, const RMat& p) {
  std::vector<CMat> out;
  for (Index y = 0; y < p.rows(); ++y) {
    CMat e = CMat::Zero(m.dim(), m.dim());
    for (Index x = 0; x < p.cols(); ++x) e += p(y, x) * m[static_cast<std::size_t>(x)];
    out.push_back(e);
  }
  return Povm(out);
}

GammaOptions few_restarts(std::uint64_t seed) {
  GammaOptions o;
  o.restarts = 3;
  o.seed = seed;
  return o;
}

}  // namespace

// Coarse-graining a readout never increases gamma. The optimiser for the
// finer POVM is seeded with the coarse optimum so both estimates refer to
// comparable local maxima.
TEST(Properties, DataProcessingInequality) {
  std::mt19937_64 rng(173);
  for (int t = 0; t < 200; ++t) {
    const Index d = 2 + t % 2, nx = 2 + t % 3, ny = 2 + (t / 3) % 3;
    const DetectionChannel p1(random_stochastic(nx, d, rng));
    const RMat p2 = random_stochastic(ny, nx, rng);
    const auto pi = ProjectiveMeasurement::from_basis(random_unitary(d, rng));
    const Povm fine = povm_from_detection(p1, pi);
    const Povm coarse = post_process(fine, p2);
    const auto gc = gamma_coefficient(coarse, few_restarts(static_cast<std::uint64_t>(t)));
    auto opt = few_restarts(static_cast<std::uint64_t>(t) + 1000);
    opt.seeds.push_back(gc.pair.xi().amplitudes());
    const auto gf = gamma_coefficient(fine, opt);
    EXPECT_LE(gc.value, gf.value + 1e-9) << "case " << t;
    // Pair-level statement, independent of the optimiser.
    EXPECT_LE(gamma_objective(coarse, gc.pair), gamma_objective(fine, gc.pair) + 1e-12);
  }
}

TEST(Properties, ClassicalDataProcessing) {
  std::mt19937_64 rng(179);
  for (int t = 0; t < 200; ++t) {
    const Index d = 2 + t % 2;
    const RMat p1 = random_stochastic(2 + t % 4, d, rng);
    const RMat p2 = random_stochastic(2 + t % 3, p1.rows(), rng);
    const auto a = gamma_classical(DetectionChannel(p1), few_restarts(static_cast<std::uint64_t>(t)));
    const auto b = gamma_classical(DetectionChannel(p2 * p1), few_restarts(static_cast<std::uint64_t>(t)));
    EXPECT_LE(b.value, a.value + 1e-6) << "case " << t;
  }
}

// gamma_M <= gamma_{M (x) 1} <= gamma_{M (x) M}: adding an idle or a second
// noisy probe can only help. Each stage is seeded with the previous optimum
// lifted to the larger space.
TEST(Properties, TensoringMonotonicity) {
  std::mt19937_64 rng(181);
  for (int t = 0; t < 200; ++t) {
    const Povm m = random_povm(2, 2, rng);
    const auto g1 = gamma_coefficient(m, few_restarts(static_cast<std::uint64_t>(t)));
    const Povm mi = tensor_povm(m, trivial_povm(2));
    const Povm mm = tensor_povm(m, 2);
    auto o2 = few_restarts(static_cast<std::uint64_t>(t) + 1);
    o2.restarts = 1;
    o2.seeds.push_back(kron(g1.pair.xi().amplitudes(), basis_vector(2, 0)));
    const auto g2 = gamma_coefficient(mi, o2);
    auto o3 = o2;
    o3.seeds = {g2.pair.xi().amplitudes()};
    const auto g3 = gamma_coefficient(mm, o3);
    EXPECT_LE(g1.value, g2.value + 1e-6) << "case " << t;
    EXPECT_LE(g2.value, g3.value + 1e-6) << "case " << t;
    EXPECT_LE(g3.value, 1.0 + 1e-9);
    // The idle probe adds nothing: M (x) 1 and M share their gamma.
    EXPECT_NEAR(g1.value, g2.value, 1e-5) << "case " << t;
  }
}
