#ifndef REPEATR_THEORY_HPP
#define REPEATR_THEORY_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <utility>

namespace repeatr {

// Population relations between discriminability and intraclass correlation
// under Gaussian random-effects models, with Euclidean distance.

/// Discriminability of the univariate Gaussian ANOVA model with the given ICC.
double discr_from_icc(double icc);

/// 2 (D - 1/2), rescaled to [0, 1].
double discr_star_from_icc(double icc);

/// Inverse of `discr_from_icc` on [0.5, 1].
double icc_from_discr(double d);

/// The ICC at which `discr_from_icc(icc) == icc`.
double discr_icc_fixed_point();

/// Noise covariance and subject-effect covariance of a MANOVA population.
struct ManovaPopulation {
    Eigen::MatrixXd noise;
    Eigen::MatrixXd subject;

    std::size_t dimension() const { return static_cast<std::size_t>(noise.rows()); }

    /// Compound symmetric design: sigma2 * Q and sigma_mu2 * Q with
    /// Q = (1 - rho) I + rho 11'.
    static ManovaPopulation compound_symmetric(std::size_t dimension, double sigma2, double sigma_mu2,
                                               double rho);

    /// Throws DomainError unless both matrices are square, equal-sized,
    /// symmetric to 1e-12 and numerically PSD.
    void validate() const;
};

/// tr(subject) / (tr(subject) + tr(noise)).
double trace_icc(const ManovaPopulation& pop);

/// det(subject) / (det(noise) + det(subject)).
double wilks_lambda(const ManovaPopulation& pop);

/**
 * Spectrum of H = P M, P = [[2S, S], [S, 2S + 2Su]], M = diag(I, -I).
 * V1/W1 are the sum and sum of squares of the positive eigenvalues, V2/W2
 * the same for the magnitudes of the negative ones.
 */
struct SpectrumSummary {
    double v1 = 0;
    double w1 = 0;
    double v2 = 0;
    double w2 = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;

    double dof_positive() const { return v1 * v1 / w1; }
    double dof_negative() const { return v2 * v2 / w2; }
};

SpectrumSummary manova_spectrum(const ManovaPopulation& pop);

/// Two-moment (Satterthwaite) F approximation of D under the MANOVA model.
double discr_approx_manova(const ManovaPopulation& pop);

/// Lower bound ratio 1 + v / (1 - v).
double bound_ratio_lower(double trace_icc);
/// Upper bound ratio 1 + (4/3) v / (1 - v).
double bound_ratio_upper(double trace_icc);

/// Non-decreasing bounds on the approximation at trace ICC `lambda_tr` for
/// fixed dispersions (degrees of freedom) h1, h2 >= 1.
std::pair<double, double> discr_bounds(double lambda_tr, double h1, double h2);

/// rho * d + (1 - rho) * d^(n-1): the fingerprint index implied by
/// discriminability d and match-indicator correlation rho >= 0.
double fingerprint_from_discr(double d, double rho, std::size_t subjects);

} // namespace repeatr

#endif
