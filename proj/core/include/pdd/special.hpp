#pragma once

namespace pdd {

/// Regularized incomplete beta I_x(a, b), the CDF of Beta(a, b) at x.
/// Modified Lentz continued fraction, using I_x(a,b) = 1 - I_{1-x}(b,a) on
/// the slowly converging side. Requires x in [0,1], a > 0, b > 0.
double beta_cdf(double x, double a, double b);

}  // namespace pdd
