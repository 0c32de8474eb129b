#include "elda/digamma.hpp"

#include <cmath>
#include <stdexcept>

namespace elda {

double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma: argument must be positive");
  double acc = 0.0;
  while (x < 6.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  // psi(x) ~ ln x - 1/(2x) - sum_n B_{2n} / (2n x^{2n});
  // at x >= 6 the first dropped term (x^-16) is below 2e-13 absolute.
  double z = 1.0 / (x * x);
  double series =
      z * (1.0 / 12.0 -
           z * (1.0 / 120.0 -
                z * (1.0 / 252.0 -
                     z * (1.0 / 240.0 -
                          z * (1.0 / 132.0 - z * (691.0 / 32760.0 - z * (1.0 / 12.0)))))));
  return acc + std::log(x) - 0.5 / x - series;
}

}  // namespace elda
