#pragma once

namespace elda {

// Digamma via upward recurrence to x >= 6 followed by the asymptotic series
// through the x^-14 term. Throws std::domain_error for x <= 0 or NaN.
double digamma(double x);

}  // namespace elda
