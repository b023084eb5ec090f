#include "repeatr/permtest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "repeatr/estimators.hpp"
#include "repeatr/parallel.hpp"
#include "repeatr/random.hpp"
#include "repeatr/special.hpp"

namespace repeatr {

double permutation_p_value(double observed, std::span<const double> null_sample) {
    // Relabelings that reproduce the observed grouping give the same statistic up to
    // summation order, so near-equal values are counted as ties.
    const double cutoff = observed - 1e-12 * std::max(1.0, std::abs(observed));
    const auto extreme = std::count_if(null_sample.begin(), null_sample.end(),
                                       [cutoff](double v) { return v >= cutoff; });
    return static_cast<double>(1 + extreme) / static_cast<double>(null_sample.size() + 1);
}

SessionAssignment draw_session_permutation(std::size_t subjects, std::size_t sessions,
                                           std::uint64_t seed) {
    Rng rng(seed);
    auto slot = identity_assignment(subjects, sessions);
    for (auto& row : slot) rng.shuffle(std::span<std::size_t>(row));
    return slot;
}

MeasurementSet permute_within_sessions(const MeasurementSet& ms, std::uint64_t seed) {
    const auto n = ms.subjects();
    const auto s = ms.sessions();
    auto slot = draw_session_permutation(n, s, seed);
    std::vector<double> values;
    values.reserve(ms.values().size());
    for (std::size_t t = 0; t < s; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            auto v = ms.at(slot[t][i], t);
            values.insert(values.end(), v.begin(), v.end());
        }
    }
    return MeasurementSet(ms.subject_ids(), ms.session_ids(), ms.features(), std::move(values));
}

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t replicate) {
    return derive_seed(seed, {static_cast<std::uint64_t>(replicate)});
}

std::vector<TestResult> permutation_tests(PanelEngine& engine, std::span<const StatisticSpec> specs,
                                          std::size_t replications, std::uint64_t seed,
                                          std::size_t threads) {
    if (replications == 0) {
        throw Error(ErrorKind::ConfigError, "B: need at least one permutation replicate");
    }
    const auto n = engine.panel().subjects();
    const auto s = engine.panel().sessions();

    std::vector<StatisticFunction> functions;
    std::vector<TestResult> results(specs.size());
    const auto ident = identity_assignment(n, s);
    for (std::size_t k = 0; k < specs.size(); ++k) {
        functions.push_back(engine.statistic(specs[k]));
        results[k].statistic = specs[k].name();
        results[k].observed = functions[k](ident);
        results[k].replications = replications;
        results[k].null_sample.resize(replications);
        results[k].seed = seed;
    }

    parallel_for(replications, threads, [&](std::size_t b) {
        const auto slot = draw_session_permutation(n, s, replicate_seed(seed, b));
        for (std::size_t k = 0; k < functions.size(); ++k) {
            results[k].null_sample[b] = functions[k](slot);
        }
    });

    for (auto& r : results) r.p_value = permutation_p_value(r.observed, r.null_sample);
    return results;
}

TestResult permutation_test(const MeasurementSet& ms, const StatisticSpec& spec,
                            std::size_t replications, std::uint64_t seed, std::size_t threads) {
    PanelEngine engine(ms);
    return permutation_tests(engine, std::span<const StatisticSpec>(&spec, 1), replications, seed,
                             threads)
        .front();
}

double parametric_f_test(const MeasurementSet& ms) {
    const auto estimate = icc_anova(ms);
    const double f = estimate.detail.at("F");
    const auto n = static_cast<double>(ms.subjects());
    const auto s = static_cast<double>(ms.sessions());
    return f_sf(f, n - 1, n * (s - 1));
}

} // namespace repeatr
