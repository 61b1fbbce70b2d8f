// Photon-count readout of an NV centre: how much Fisher information a
// single threshold keeps, and where the threshold sits.

#include <cstdio>

#include "metroq/metroq.hpp"

int main() {
  using namespace metroq;
  for (double lambda0 : {10.0, 27.0, 50.0}) {
    PoissonReadout r;
    r.lambda0 = lambda0;
    r.lambda1 = 0.65 * lambda0;
    r.tail_tol = 1e-9;
    const double full = max_over_phi(poisson_detection_channel(r)).value;
    const auto two = optimize_binning(r, 2);
    const auto three = optimize_binning(r, 3);
    std::printf("lambda0 %5.1f  F %.5f  threshold %3d keeps %5.1f%%  three bins keep %5.1f%%\n", lambda0, full,
                two.scheme.boundaries[0], 100 * two.value / full, 100 * three.value / full);
  }
}
