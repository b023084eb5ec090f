#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "repeatr/engine.hpp"
#include "repeatr/estimators.hpp"
#include "repeatr/permtest.hpp"
#include "repeatr/random.hpp"
#include "repeatr/simulate.hpp"
#include "repeatr/special.hpp"

using namespace repeatr;

namespace {

/// Direct estimator evaluation, the way a user would compute it.
double direct(const MeasurementSet& ms, const StatisticSpec& spec) {
    const auto dm = pairwise_distances(ms, spec.metric);
    switch (spec.kind) {
    case StatisticKind::Dhat: return sample_discriminability(dm).value;
    case StatisticKind::Dtilde:
        return spec.strategy ? multibatch_estimate(dm, *spec.strategy).value
                             : rank_discriminability(dm).value;
    case StatisticKind::Drs:
        return multibatch_estimate(dm, spec.strategy.value_or(
                                           MultiBatchStrategy{Pairing::AllBatches, RankBase::Drs}))
            .value;
    case StatisticKind::Fingerprint: return fingerprint_index(dm, 0, 1).value;
    case StatisticKind::Icc: return icc_anova(ms).value;
    case StatisticKind::F: return icc_anova(ms).detail.at("F");
    case StatisticKind::I2c2: return i2c2_moments(ms).value;
    case StatisticKind::PcaIcc: return pca_icc(ms).value;
    }
    return NAN;
}

MeasurementSet separated(std::size_t n) {
    std::vector<double> v;
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t i = 0; i < n; ++i) v.push_back(10.0 * i + 0.1 * t);
    return MeasurementSet::from_values(n, 2, 1, v);
}

} // namespace

TEST(Spec, ParsesAndNames) {
    for (const char* name : {"dhat", "dtilde", "drs", "fingerprint", "icc", "f", "i2c2", "pca-icc",
                             "dtilde:first-last", "drs:first-rest", "drs:all-batches"}) {
        EXPECT_EQ(StatisticSpec::parse(name).name(), name);
    }
    EXPECT_THROW(StatisticSpec::parse("median"), Error);
    EXPECT_THROW(StatisticSpec::parse("icc:first-last"), Error);
}

TEST(Engine, RelabeledStatisticsMatchRecomputation) {
    const auto uni = oracle::random_panel(7, 4, 1, 5, 1.2);
    const auto multi = oracle::random_panel(7, 4, 3, 6, 1.2);
    const std::vector<std::string> names{"dhat",
                                         "dtilde",
                                         "drs",
                                         "fingerprint",
                                         "i2c2",
                                         "dtilde:first-last",
                                         "dtilde:first-rest",
                                         "dtilde:all-batches",
                                         "drs:first-last",
                                         "drs:first-rest"};
    for (const auto* ms : {&uni, &multi}) {
        PanelEngine engine(*ms);
        auto all = names;
        all.push_back(ms->features() == 1 ? "icc" : "pca-icc");
        if (ms->features() == 1) all.push_back("f");
        for (const auto& name : all) {
            const auto spec = StatisticSpec::parse(name);
            const auto fn = engine.statistic(spec);
            for (std::uint64_t seed = 0; seed < 8; ++seed) {
                const auto slot = draw_session_permutation(7, 4, seed);
                const auto permuted = permute_within_sessions(*ms, seed);
                EXPECT_NEAR(fn(slot), direct(permuted, spec), 1e-12) << name << " seed " << seed;
            }
            EXPECT_NEAR(engine.observed(spec), direct(*ms, spec), 1e-12) << name;
        }
    }
}

TEST(Engine, PearsonMetricIsHonoured) {
    const auto ms = oracle::random_panel(6, 3, 4, 9);
    PanelEngine engine(ms);
    const auto spec = StatisticSpec::parse("dtilde", Metric::OneMinusPearson);
    EXPECT_NEAR(engine.observed(spec), direct(ms, spec), 1e-14);
}

TEST(Permutation, PreservesSessionMultisets) {
    const auto ms = oracle::random_panel(9, 3, 2, 4);
    const auto out = permute_within_sessions(ms, 77);
    for (std::size_t t = 0; t < 3; ++t) {
        std::vector<std::vector<double>> a, b;
        for (std::size_t i = 0; i < 9; ++i) {
            a.emplace_back(ms.at(i, t).begin(), ms.at(i, t).end());
            b.emplace_back(out.at(i, t).begin(), out.at(i, t).end());
        }
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        EXPECT_EQ(a, b);
    }
    EXPECT_EQ(permute_within_sessions(ms, 77), out);
    EXPECT_EQ(out.subject_ids(), ms.subject_ids());
}

TEST(Permutation, TwoSubjectsSwapHalfTheTime) {
    const int draws = 4000;
    int swaps = 0;
    for (int seed = 0; seed < draws; ++seed) {
        swaps += draw_session_permutation(2, 1, static_cast<std::uint64_t>(seed))[0][0] == 1;
    }
    EXPECT_NEAR(static_cast<double>(swaps) / draws, 0.5, 4 * std::sqrt(0.25 / draws));
}

TEST(PValue, AddOneConvention) {
    const std::vector<double> null{0.1, 0.5, 0.5, 0.9};
    EXPECT_DOUBLE_EQ(permutation_p_value(0.5, null), 4.0 / 5.0);
    EXPECT_DOUBLE_EQ(permutation_p_value(1.0, null), 1.0 / 5.0);
    EXPECT_DOUBLE_EQ(permutation_p_value(0.0, null), 1.0);
}

TEST(PermutationTest, IdenticalSubjectsGiveOne) {
    const auto ms = MeasurementSet::from_values(5, 2, 1, std::vector<double>(10, 3.0));
    const auto r = permutation_test(ms, StatisticSpec::parse("dhat"), 50, 1);
    EXPECT_EQ(r.observed, 0.0);
    EXPECT_EQ(r.p_value, 1.0);
}

TEST(PermutationTest, SeparatedPanelGivesSmallestP) {
    const auto r = permutation_test(separated(10), StatisticSpec::parse("dhat"), 199, 123);
    EXPECT_EQ(r.observed, 1.0);
    EXPECT_DOUBLE_EQ(r.p_value, 0.005);
    EXPECT_LT(*std::max_element(r.null_sample.begin(), r.null_sample.end()), 1.0);
    EXPECT_EQ(r.null_sample.size(), 199u);
    EXPECT_EQ(r.seed, 123u);
}

TEST(PermutationTest, NullSampleIndependentOfThreads) {
    const auto ms = oracle::random_panel(12, 3, 2, 8, 0.5);
    const auto spec = StatisticSpec::parse("dtilde");
    const auto one = permutation_test(ms, spec, 97, 55, 1);
    for (std::size_t threads : {2, 3, 8}) {
        const auto many = permutation_test(ms, spec, 97, 55, threads);
        ASSERT_EQ(one.null_sample.size(), many.null_sample.size());
        for (std::size_t b = 0; b < one.null_sample.size(); ++b) {
            EXPECT_EQ(std::bit_cast<std::uint64_t>(one.null_sample[b]),
                      std::bit_cast<std::uint64_t>(many.null_sample[b]));
        }
    }
}

TEST(PermutationTest, ReplicateBUsesItsOwnSeed) {
    const auto ms = oracle::random_panel(6, 2, 1, 31, 0.5);
    const auto spec = StatisticSpec::parse("drs");
    const auto r = permutation_test(ms, spec, 20, 9);
    for (std::size_t b = 0; b < 20; ++b) {
        EXPECT_NEAR(r.null_sample[b], direct(permute_within_sessions(ms, replicate_seed(9, b)), spec),
                    1e-15);
    }
}

TEST(PermutationTest, IccAndFDecideIdentically) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto ms = oracle::random_panel(8, 3, 1, 200 + seed, 0.4);
        PanelEngine engine(ms);
        const std::vector<StatisticSpec> specs{StatisticSpec::parse("icc"), StatisticSpec::parse("f")};
        const auto results = permutation_tests(engine, specs, 99, seed);
        EXPECT_EQ(results[0].p_value, results[1].p_value);
    }
}

TEST(PermutationTest, RejectsZeroReplicates) {
    EXPECT_THROW(permutation_test(separated(3), StatisticSpec::parse("dhat"), 0, 1), Error);
}

TEST(PermutationTest, ValidUnderTheNull) {
    ScenarioConfig cfg;
    cfg.sigma2 = 1;
    cfg.sigma_mu2 = 0;
    cfg.subjects = 10;
    const int tests = 300;
    const std::vector<StatisticSpec> specs{StatisticSpec::parse("dtilde"), StatisticSpec::parse("icc")};
    std::vector<std::vector<double>> ps(specs.size());
    for (int k = 0; k < tests; ++k) {
        PanelEngine engine(gen_gaussian_anova(cfg, derive_seed(4, {static_cast<std::uint64_t>(k)})));
        const auto results = permutation_tests(engine, specs, 99, static_cast<std::uint64_t>(k));
        for (std::size_t j = 0; j < specs.size(); ++j) ps[j].push_back(results[j].p_value);
    }
    for (std::size_t j = 0; j < specs.size(); ++j) {
        for (double alpha : {0.01, 0.05, 0.1}) {
            const double rate =
                static_cast<double>(std::count_if(ps[j].begin(), ps[j].end(),
                                                  [alpha](double p) { return p <= alpha; })) /
                tests;
            EXPECT_LE(rate, alpha + 3 * std::sqrt(alpha * (1 - alpha) / tests))
                << specs[j].name() << " alpha " << alpha;
        }
    }
}

TEST(ParametricF, HandPanel) {
    const auto ms = MeasurementSet::from_values(2, 2, 1, {1, 5, 3, 7});
    EXPECT_NEAR(parametric_f_test(ms), 1 - oracle::f_cdf(8.0, 1, 2), 1e-13);
}

TEST(ParametricF, Limits) {
    const auto equal_means = MeasurementSet::from_values(2, 3, 1, {0, 1, 2, 1, 1, 1});
    EXPECT_EQ(parametric_f_test(equal_means), 1.0);
    const auto tight = MeasurementSet::from_values(3, 2, 1, {0, 5, 10, 1e-9, 5, 10});
    EXPECT_LT(parametric_f_test(tight), 1e-12);
    EXPECT_THROW(parametric_f_test(MeasurementSet::from_values(2, 2, 1, {1, 1, 1, 1})), Error);
}
