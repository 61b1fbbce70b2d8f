// GHZ probes with noisy readout: the Fisher information approaches N^2 once
// the product readout distributions stop overlapping.

#include <cstdio>

#include "metroq/metroq.hpp"

int main() {
  using namespace metroq;
  const double p = 0.95, q = 0.9;
  std::printf("%4s %12s %12s %10s %14s\n", "N", "lower", "exact", "exact/N^2", "Werner r=0.7");
  for (int n : {1, 2, 5, 10, 20, 40}) {
    const double exact = exact_fn_ghz(n, p, q);
    std::printf("%4d %12.4f %12.4f %10.6f %14.4f\n", n, ghz_lower_bound(n, p, q).f_lower, exact, exact / (n * n),
                werner_lower_bound(n, p, q, 0.7).value);
  }
}
