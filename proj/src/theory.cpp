#include "repeatr/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "repeatr/error.hpp"
#include "repeatr/special.hpp"

namespace repeatr {

double discr_from_icc(double icc) {
    if (!(icc >= 0 && icc <= 1)) {
        throw Error(ErrorKind::DomainError, "ICC must lie in [0, 1]");
    }
    if (icc == 1) return 1.0;
    return 0.5 + std::atan(icc / std::sqrt((1 - icc) * (icc + 3))) / std::numbers::pi;
}

double discr_star_from_icc(double icc) {
    return 2.0 * (discr_from_icc(icc) - 0.5);
}

double icc_from_discr(double d) {
    if (!(d >= 0.5 && d <= 1)) {
        throw Error(ErrorKind::DomainError, "discriminability must lie in [0.5, 1]");
    }
    if (d == 1) return 1.0;
    const double theta = std::tan(std::numbers::pi * (d - 0.5));
    // theta (sqrt(4 theta^2 + 3) - theta) / (1 + theta^2), free of cancellation
    return std::min(1.0, theta * (std::sqrt(4 * theta * theta + 3) - theta) / (1 + theta * theta));
}

double discr_icc_fixed_point() {
    double lo = 0.5;
    double hi = 0.99;
    for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
        const double mid = 0.5 * (lo + hi);
        (discr_from_icc(mid) > mid ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ManovaPopulation ManovaPopulation::compound_symmetric(std::size_t dimension, double sigma2,
                                                     double sigma_mu2, double rho) {
    const auto l = static_cast<Eigen::Index>(dimension);
    Eigen::MatrixXd q = Eigen::MatrixXd::Constant(l, l, rho);
    q.diagonal().setOnes();
    return {sigma2 * q, sigma_mu2 * q};
}

namespace {

void check_covariance(const Eigen::MatrixXd& m, const char* name) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw Error(ErrorKind::DomainError, std::string(name) + " must be a non-empty square matrix");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw Error(ErrorKind::DomainError, std::string(name) + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::EigenFailure, std::string(name) + ": eigen-decomposition failed");
    }
    if (solver.eigenvalues().minCoeff() < -1e-10 * scale) {
        throw Error(ErrorKind::DomainError, std::string(name) + " is not positive semi-definite");
    }
}

} // namespace

void ManovaPopulation::validate() const {
    check_covariance(noise, "noise covariance");
    check_covariance(subject, "subject covariance");
    if (noise.rows() != subject.rows()) {
        throw Error(ErrorKind::DomainError, "covariances differ in dimension");
    }
}

double trace_icc(const ManovaPopulation& pop) {
    pop.validate();
    const double tu = pop.subject.trace();
    const double te = pop.noise.trace();
    if (!(tu + te > 0)) {
        throw Error(ErrorKind::DomainError, "trace ICC undefined for zero covariances");
    }
    return tu / (tu + te);
}

double wilks_lambda(const ManovaPopulation& pop) {
    pop.validate();
    const double du = pop.subject.determinant();
    const double de = pop.noise.determinant();
    if (!(du + de > 0)) {
        throw Error(ErrorKind::DomainError, "Wilks' lambda undefined for singular covariances");
    }
    return du / (de + du);
}

SpectrumSummary manova_spectrum(const ManovaPopulation& pop) {
    pop.validate();
    const auto l = pop.noise.rows();
    {
        Eigen::LLT<Eigen::MatrixXd> llt(pop.noise);
        if (llt.info() != Eigen::Success) {
            throw Error(ErrorKind::NotPositiveDefinite, "noise covariance is not positive definite");
        }
    }

    Eigen::MatrixXd p(2 * l, 2 * l);
    p.topLeftCorner(l, l) = 2 * pop.noise;
    p.topRightCorner(l, l) = pop.noise;
    p.bottomLeftCorner(l, l) = pop.noise;
    p.bottomRightCorner(l, l) = 2 * pop.noise + 2 * pop.subject;

    // H = P M is similar to P^{1/2} M P^{1/2}, which is symmetric.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> p_solver(p);
    if (p_solver.info() != Eigen::Success) {
        throw Error(ErrorKind::EigenFailure, "eigen-decomposition of P failed");
    }
    if (p_solver.eigenvalues().minCoeff() <= 0) {
        throw Error(ErrorKind::NotPositiveDefinite, "block covariance P is not positive definite");
    }
    const Eigen::MatrixXd root = p_solver.operatorSqrt();
    Eigen::MatrixXd sym = root;
    sym.rightCols(l) *= -1.0; // root * M
    sym = sym * root;
    sym = 0.5 * (sym + sym.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::EigenFailure, "eigen-decomposition of the congruent form failed");
    }
    SpectrumSummary out;
    for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
        const double ev = solver.eigenvalues()(k);
        if (ev > 0) {
            out.v1 += ev;
            out.w1 += ev * ev;
            ++out.positive;
        } else if (ev < 0) {
            out.v2 -= ev;
            out.w2 += ev * ev;
            ++out.negative;
        }
    }
    return out;
}

double discr_approx_manova(const ManovaPopulation& pop) {
    const auto spectrum = manova_spectrum(pop);
    return f_cdf(spectrum.v2 / spectrum.v1, spectrum.dof_positive(), spectrum.dof_negative());
}

double bound_ratio_lower(double v) {
    return 1.0 + v / (1.0 - v);
}

double bound_ratio_upper(double v) {
    return 1.0 + (4.0 / 3.0) * v / (1.0 - v);
}

std::pair<double, double> discr_bounds(double lambda_tr, double h1, double h2) {
    if (!(lambda_tr >= 0 && lambda_tr < 1)) {
        throw Error(ErrorKind::DomainError, "trace ICC must lie in [0, 1)");
    }
    if (!(h1 >= 1 && h2 >= 1) || !std::isfinite(h1) || !std::isfinite(h2)) {
        throw Error(ErrorKind::DomainError, "dispersions must be finite and >= 1");
    }
    return {f_cdf(bound_ratio_lower(lambda_tr), h1, h2), f_cdf(bound_ratio_upper(lambda_tr), h1, h2)};
}

double fingerprint_from_discr(double d, double rho, std::size_t subjects) {
    if (!(d >= 0.5 && d <= 1)) {
        throw Error(ErrorKind::DomainError, "discriminability must lie in [0.5, 1]");
    }
    if (!(rho >= 0 && rho <= 1)) {
        throw Error(ErrorKind::DomainError, "indicator correlation must lie in [0, 1]");
    }
    if (subjects < 2) {
        throw Error(ErrorKind::DomainError, "need at least 2 subjects");
    }
    return rho * d + (1 - rho) * std::pow(d, static_cast<double>(subjects - 1));
}

} // namespace repeatr
