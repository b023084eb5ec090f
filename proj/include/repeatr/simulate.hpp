#ifndef REPEATR_SIMULATE_HPP
#define REPEATR_SIMULATE_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "repeatr/core.hpp"
#include "repeatr/metrics.hpp"
#include "repeatr/scenario.hpp"

namespace repeatr {

// ---------------------------------------------------------------------------
// Generators. Every generator is a pure function of (cfg, seed).
// ---------------------------------------------------------------------------

/// x_it = mu_i + e_it, mu_i ~ N(0, sigma_mu2), e_it ~ N(0, sigma2).
MeasurementSet gen_gaussian_anova(const ScenarioConfig& cfg, std::uint64_t seed);

/// Compound-symmetric MANOVA: Sigma = sigma2 Q, Sigma_mu = sigma_mu2 Q.
MeasurementSet gen_gaussian_manova(const ScenarioConfig& cfg, std::uint64_t seed);

/// Both random effects exponentiated (element-wise for vectors) before summing.
MeasurementSet gen_lognormal(const ScenarioConfig& cfg, std::uint64_t seed);

/// Gaussian ANOVA with a session-level batch effect. Session t (1-based)
/// gains a mean offset t for t >= 2, or has noise variance t * sigma2.
MeasurementSet gen_batch(const ScenarioConfig& cfg, std::uint64_t seed);

/// Dispatches on model and batch kind.
MeasurementSet generate(const ScenarioConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Brute-force Monte Carlo oracles.
// ---------------------------------------------------------------------------

struct MonteCarloEstimate {
    double value;
    double se;
    std::size_t reps;
};

/**
 * P(delta(x_it, x_it') < delta(x_it, x_i't'')) by direct simulation of the
 * triple: t != t' and t'' drawn uniformly from the configured sessions,
 * which makes the target equal to the expectation of the sample
 * discriminability for every model, batch designs included.
 */
MonteCarloEstimate true_discriminability_mc(const ScenarioConfig& cfg, std::size_t reps,
                                            std::uint64_t seed, Metric metric = Metric::Euclidean);

struct MatchIndicatorEstimate {
    double discriminability; ///< P(delta_i12 < delta_ii'12)
    double correlation;      ///< corr of the indicators for two competitors i', i''
    std::size_t reps;
};

/// Joint behaviour of two match indicators sharing subject i, sessions 1 and 2.
MatchIndicatorEstimate match_indicator_mc(const ScenarioConfig& cfg, std::size_t reps,
                                          std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiment runner.
// ---------------------------------------------------------------------------

/// Name of the parametric one-way F-test in a statistics list.
inline constexpr std::string_view kParametricFTest = "f-test";

struct ExperimentConfig {
    ScenarioConfig scenario;
    std::vector<std::size_t> subject_grid;
    /// Permutation-test statistics (see `StatisticSpec::parse`), plus
    /// optionally "f-test" for the parametric test.
    std::vector<std::string> statistics;
    std::size_t iterations = 300;
    std::size_t replications = 200;
    double alpha = 0.05;
    Metric metric = Metric::Euclidean;

    /// Defaults filled in for an empty grid or statistics list.
    ExperimentConfig resolved() const;
    void validate() const;
};

/// Reads `key = value` lines; lists as `[a, b, c]`. Throws ConfigError
/// naming the field.
ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string format_experiment_config(const ExperimentConfig& cfg);

struct EstimateSummary {
    double mean = 0;
    double sd = 0;
    double q05 = 0;
    double q25 = 0;
    double q50 = 0;
    double q75 = 0;
    double q95 = 0;
};

EstimateSummary summarize(std::vector<double> values);

struct PowerPoint {
    std::size_t subjects;
    std::size_t iterations;
    double rejection_rate;
    double se;
    EstimateSummary estimates;
};

/// Rejection proportions and estimate distributions of one statistic over
/// the subject grid.
struct PowerCurve {
    std::string statistic;
    std::vector<PowerPoint> points;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<PowerCurve> curves;
    /// Per statistic, per grid point: raw estimates and p-values in
    /// iteration order.
    std::map<std::string, std::vector<std::vector<double>>> estimates;
    std::map<std::string, std::vector<std::vector<double>>> p_values;

    const PowerCurve& curve(std::string_view statistic) const;
};

/**
 * For every n in the grid and every iteration: generate a panel, compute
 * each statistic and test it. Cell (n, iteration) draws its panel and all of
 * its permutations from hashes of (seed, n, iteration), so the result does
 * not depend on `threads`.
 */
ExperimentResult run_power_experiment(const ExperimentConfig& cfg, std::size_t threads = 1);

std::string result_to_json(const ExperimentResult& result);
std::string result_to_csv(const ExperimentResult& result);

} // namespace repeatr

#endif
