// Numerical gamma of a bit-flip readout next to its two-bin closed form.

#include <cstdio>

#include "metroq/metroq.hpp"

int main() {
  using namespace metroq;
  std::printf("%6s %6s %12s %12s\n", "p", "q", "numeric", "closed form");
  for (double p : {0.99, 0.95, 0.9, 0.8})
    for (double q : {0.95, 0.9, 0.7}) {
      const auto g = gamma_coefficient(bit_flip_povm(p, q));
      std::printf("%6.2f %6.2f %12.8f %12.8f\n", p, q, g.value, f2bin_bar(p, q).value);
    }
}
