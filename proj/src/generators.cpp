#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "repeatr/random.hpp"
#include "repeatr/simulate.hpp"

namespace repeatr {

namespace {

// Draws the two random effects of the configured model.
class ModelSampler {
public:
    explicit ModelSampler(const ScenarioConfig& cfg) : cfg_(cfg), l_(cfg.dimension) {
        cfg.validate();
        if (is_multivariate(cfg.model)) {
            const auto l = static_cast<Eigen::Index>(l_);
            Eigen::MatrixXd q = Eigen::MatrixXd::Constant(l, l, cfg.rho);
            q.diagonal().setOnes();
            Eigen::LLT<Eigen::MatrixXd> llt(q);
            if (llt.info() != Eigen::Success) {
                throw Error(ErrorKind::ConfigError, "rho: correlation matrix is not positive definite");
            }
            factor_ = llt.matrixL();
        }
        z_.resize(l_);
    }

    std::size_t dimension() const { return l_; }

    void subject_effect(Rng& rng, std::span<double> out) {
        correlated(rng, std::sqrt(cfg_.sigma_mu2), out);
    }

    /// Noise plus batch offset for a 0-based session.
    void noise(Rng& rng, std::size_t session, std::span<double> out) {
        double scale = std::sqrt(cfg_.sigma2);
        if (cfg_.batch == BatchKind::Scaling) scale *= std::sqrt(static_cast<double>(session + 1));
        correlated(rng, scale, out);
        if (cfg_.batch == BatchKind::MeanShift && session >= 1) {
            for (auto& v : out) v += static_cast<double>(session + 1);
        }
    }

    /// Full measurement given a subject effect.
    void measurement(Rng& rng, std::span<const double> subject, std::size_t session,
                     std::span<double> out) {
        noise(rng, session, out);
        for (std::size_t k = 0; k < l_; ++k) out[k] += subject[k];
    }

private:
    void correlated(Rng& rng, double scale, std::span<double> out) {
        for (auto& z : z_) z = rng.normal();
        if (factor_.size() == 0) {
            for (std::size_t k = 0; k < l_; ++k) out[k] = scale * z_[k];
        } else {
            for (std::size_t r = 0; r < l_; ++r) {
                double acc = 0;
                for (std::size_t c = 0; c <= r; ++c) {
                    acc += factor_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * z_[c];
                }
                out[r] = scale * acc;
            }
        }
        if (is_lognormal(cfg_.model)) {
            for (std::size_t k = 0; k < l_; ++k) out[k] = std::exp(out[k]);
        }
    }

    ScenarioConfig cfg_;
    std::size_t l_;
    Eigen::MatrixXd factor_;
    std::vector<double> z_;
};

MeasurementSet draw_panel(const ScenarioConfig& cfg, std::uint64_t seed) {
    ModelSampler sampler(cfg);
    Rng rng(seed);
    const auto n = cfg.subjects;
    const auto s = cfg.sessions;
    const auto l = cfg.dimension;
    std::vector<double> subjects(n * l);
    for (std::size_t i = 0; i < n; ++i) {
        sampler.subject_effect(rng, std::span<double>(subjects).subspan(i * l, l));
    }
    std::vector<double> values(n * s * l);
    for (std::size_t t = 0; t < s; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            sampler.measurement(rng, std::span<const double>(subjects).subspan(i * l, l), t,
                                std::span<double>(values).subspan((t * n + i) * l, l));
        }
    }
    return MeasurementSet::from_values(n, s, l, std::move(values));
}

void require_model(bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::ConfigError, std::string("model: ") + what);
}

} // namespace

MeasurementSet gen_gaussian_anova(const ScenarioConfig& cfg, std::uint64_t seed) {
    require_model(cfg.model == ModelKind::GaussianAnova && cfg.batch == BatchKind::None,
                  "expected gaussian-anova without batch effects");
    return draw_panel(cfg, seed);
}

MeasurementSet gen_gaussian_manova(const ScenarioConfig& cfg, std::uint64_t seed) {
    require_model(cfg.model == ModelKind::GaussianManova, "expected gaussian-manova");
    return draw_panel(cfg, seed);
}

MeasurementSet gen_lognormal(const ScenarioConfig& cfg, std::uint64_t seed) {
    require_model(is_lognormal(cfg.model), "expected a lognormal model");
    return draw_panel(cfg, seed);
}

MeasurementSet gen_batch(const ScenarioConfig& cfg, std::uint64_t seed) {
    require_model(cfg.model == ModelKind::GaussianAnova && cfg.batch != BatchKind::None,
                  "expected gaussian-anova with a batch effect");
    return draw_panel(cfg, seed);
}

MeasurementSet generate(const ScenarioConfig& cfg, std::uint64_t seed) {
    return draw_panel(cfg, seed);
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

MonteCarloEstimate true_discriminability_mc(const ScenarioConfig& cfg, std::size_t reps,
                                            std::uint64_t seed, Metric metric) {
    if (reps == 0) throw Error(ErrorKind::ConfigError, "reps: must be positive");
    ModelSampler sampler(cfg);
    Rng rng(seed);
    const auto l = sampler.dimension();
    const auto s = cfg.sessions;
    std::vector<double> own(l), other(l), a(l), b(l), c(l);
    std::size_t wins = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        const auto t = static_cast<std::size_t>(rng.below(s));
        auto t2 = static_cast<std::size_t>(rng.below(s - 1));
        if (t2 >= t) ++t2;
        const auto t3 = static_cast<std::size_t>(rng.below(s));
        sampler.subject_effect(rng, own);
        sampler.subject_effect(rng, other);
        sampler.measurement(rng, own, t, a);
        sampler.measurement(rng, own, t2, b);
        sampler.measurement(rng, other, t3, c);
        if (distance(a, b, metric) < distance(a, c, metric)) ++wins;
    }
    const double p = static_cast<double>(wins) / static_cast<double>(reps);
    return {p, std::sqrt(p * (1 - p) / static_cast<double>(reps)), reps};
}

MatchIndicatorEstimate match_indicator_mc(const ScenarioConfig& cfg, std::size_t reps,
                                          std::uint64_t seed) {
    if (reps == 0) throw Error(ErrorKind::ConfigError, "reps: must be positive");
    ModelSampler sampler(cfg);
    Rng rng(seed);
    const auto l = sampler.dimension();
    std::vector<double> own(l), rival1(l), rival2(l), x1(l), x2(l), y1(l), y2(l);
    std::size_t first = 0;
    std::size_t second = 0;
    std::size_t both = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        sampler.subject_effect(rng, own);
        sampler.subject_effect(rng, rival1);
        sampler.subject_effect(rng, rival2);
        sampler.measurement(rng, own, 0, x1);
        sampler.measurement(rng, own, 1, x2);
        sampler.measurement(rng, rival1, 1, y1);
        sampler.measurement(rng, rival2, 1, y2);
        const double self = distance(x1, x2, Metric::Euclidean);
        const bool i1 = self < distance(x1, y1, Metric::Euclidean);
        const bool i2 = self < distance(x1, y2, Metric::Euclidean);
        first += i1;
        second += i2;
        both += i1 && i2;
    }
    const double total = static_cast<double>(reps);
    const double d = static_cast<double>(first + second) / (2 * total);
    const double joint = static_cast<double>(both) / total;
    const double var = d * (1 - d);
    return {d, var > 0 ? (joint - d * d) / var : 0.0, reps};
}

} // namespace repeatr
