#ifndef REPEATR_PERMTEST_HPP
#define REPEATR_PERMTEST_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "repeatr/core.hpp"
#include "repeatr/engine.hpp"

namespace repeatr {

/// Default number of Monte Carlo permutations.
inline constexpr std::size_t kDefaultReplications = 200;

struct TestResult {
    std::string statistic;
    double observed = 0;
    double p_value = 1;
    std::size_t replications = 0;
    std::vector<double> null_sample;
    std::uint64_t seed = 0;
};

/// (1 + #{null >= observed}) / (B + 1).
double permutation_p_value(double observed, std::span<const double> null_sample);

/// Independent uniform permutation of the subjects within each session.
/// `permute_within_sessions` applies exactly this draw.
SessionAssignment draw_session_permutation(std::size_t subjects, std::size_t sessions,
                                           std::uint64_t seed);

MeasurementSet permute_within_sessions(const MeasurementSet& ms, std::uint64_t seed);

/// Seed of replicate `b` in a test with master seed `seed`.
std::uint64_t replicate_seed(std::uint64_t seed, std::size_t replicate);

/**
 * Upper-tail Monte Carlo permutation test against exchangeability.
 * Replicate b uses `replicate_seed(seed, b)`; the null sample is identical
 * for every `threads` value.
 */
TestResult permutation_test(const MeasurementSet& ms, const StatisticSpec& spec,
                            std::size_t replications, std::uint64_t seed, std::size_t threads = 1);

/// Several statistics tested on the same permutation stream.
std::vector<TestResult> permutation_tests(PanelEngine& engine, std::span<const StatisticSpec> specs,
                                          std::size_t replications, std::uint64_t seed,
                                          std::size_t threads = 1);

/// One-way ANOVA F-test p-value, 1 - F_{F(n-1, n(s-1))}(F).
double parametric_f_test(const MeasurementSet& ms);

} // namespace repeatr

#endif
