#ifndef REPEATR_SPECIAL_HPP
#define REPEATR_SPECIAL_HPP

namespace repeatr {

/**
 * Regularized incomplete beta function I_x(a, b).
 *
 * Evaluated by Lentz's continued fraction on whichever tail converges
 * faster, falling back to the power series when the fraction has not
 * converged after 300 terms. `complement` must equal 1 - x; passing it
 * separately keeps precision when x is close to 1.
 */
double incomplete_beta(double a, double b, double x, double complement);
double incomplete_beta(double a, double b, double x);

/// CDF of the F distribution with (d1, d2) degrees of freedom at x >= 0.
/// Degrees of freedom may be fractional.
double f_cdf(double x, double d1, double d2);

/// Upper tail 1 - f_cdf, computed without cancellation.
double f_sf(double x, double d1, double d2);

} // namespace repeatr

#endif
