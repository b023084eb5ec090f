#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "repeatr/estimators.hpp"
#include "repeatr/metrics.hpp"

using namespace repeatr;

namespace {

// Values are given per session: {session 1 of subjects 1..n, session 2 ...}.
MeasurementSet panel(std::size_t n, std::size_t s, std::vector<double> values) {
    return MeasurementSet::from_values(n, s, 1, std::move(values));
}

double dhat(const MeasurementSet& ms) { return sample_discriminability(pairwise_distances(ms)).value; }
double dtilde(const MeasurementSet& ms) { return rank_discriminability(pairwise_distances(ms)).value; }
RepeatabilityEstimate drs(const MeasurementSet& ms, std::size_t t1 = 0, std::size_t t2 = 1) {
    return ranksum_discriminability(pairwise_distances(ms), t1, t2);
}
RepeatabilityEstimate fp(const MeasurementSet& ms) {
    return fingerprint_index(pairwise_distances(ms), 0, 1);
}

MeasurementSet relabel(const MeasurementSet& ms, const std::vector<std::size_t>& order) {
    std::vector<double> values;
    std::vector<std::string> ids;
    for (std::size_t i : order) ids.push_back(ms.subject_ids()[i]);
    for (std::size_t t = 0; t < ms.sessions(); ++t) {
        for (std::size_t i : order) {
            auto v = ms.at(i, t);
            values.insert(values.end(), v.begin(), v.end());
        }
    }
    return MeasurementSet(ids, ms.session_ids(), ms.features(), values);
}

} // namespace

// ---------------------------------------------------------------------------
// Sample discriminability
// ---------------------------------------------------------------------------

TEST(Dhat, SeparatedPairIsOne) { EXPECT_EQ(dhat(panel(2, 2, {0.0, 1.0, 0.1, 1.1})), 1.0); }

TEST(Dhat, HandEnumeratedQuarter) { EXPECT_EQ(dhat(panel(2, 2, {0.0, 0.5, 1.0, 1.5})), 0.25); }

TEST(Dhat, IdenticalSubjectsGiveZero) {
    EXPECT_EQ(dhat(panel(3, 3, std::vector<double>(9, 2.5))), 0.0);
}

TEST(Dhat, MatchesFiveLoopOracle) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto ms = oracle::random_panel(3 + seed % 5, 2 + seed % 4, 1 + seed % 3, seed);
        EXPECT_NEAR(dhat(ms), oracle::dhat(ms), 1e-15) << "seed " << seed;
    }
}

TEST(Dhat, MatchesOracleWithTies) {
    std::mt19937_64 gen(5);
    std::uniform_int_distribution<int> coarse(0, 3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(5 * 3);
        for (auto& x : v) x = coarse(gen);
        const auto ms = panel(5, 3, v);
        EXPECT_NEAR(dhat(ms), oracle::dhat(ms), 1e-15);
        EXPECT_NEAR(dtilde(ms), oracle::dtilde(ms), 1e-15);
    }
}

TEST(Dhat, RejectsBadShape) {
    const CombinedDistanceMatrix dm(1, 2, Metric::Euclidean, {0, 1, 1, 0});
    EXPECT_THROW(sample_discriminability(dm), Error);
}

// ---------------------------------------------------------------------------
// Rank form
// ---------------------------------------------------------------------------

TEST(Dtilde, EqualsDhatForTwoSessions) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto ms = oracle::random_panel(8, 2, 2, 100 + seed);
        EXPECT_NEAR(dtilde(ms), dhat(ms), 1e-15);
    }
}

TEST(Dtilde, OffsetForFourSessions) {
    const auto ms = oracle::random_panel(10, 4, 1, 77);
    EXPECT_NEAR(dtilde(ms) - dhat(ms), 2.0 / (2.0 * 9 * 4), 1e-15);
}

TEST(Dtilde, SeparatedPairIsOne) { EXPECT_EQ(dtilde(panel(2, 2, {0.0, 1.0, 0.1, 1.1})), 1.0); }

TEST(Dtilde, MatchesRankOracle) {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        const auto ms = oracle::random_panel(4 + seed % 4, 2 + seed % 4, 2, 300 + seed);
        EXPECT_NEAR(dtilde(ms), oracle::dtilde(ms), 1e-15);
    }
}

TEST(Dtilde, OffsetIdentityOverShapes) {
    for (std::size_t n : {2, 3, 5, 9}) {
        for (std::size_t s : {2, 3, 4, 6}) {
            const auto ms = oracle::random_panel(n, s, 3, n * 31 + s);
            const double expected = static_cast<double>(s - 2) / (2.0 * (n - 1) * s);
            EXPECT_NEAR(dtilde(ms) - dhat(ms), expected, 1e-14) << n << "x" << s;
        }
    }
}

// ---------------------------------------------------------------------------
// Rank sum and fingerprint
// ---------------------------------------------------------------------------

TEST(Drs, SeparatedTriple) {
    const auto est = drs(panel(3, 2, {0, 1, 2, 0.1, 1.1, 2.1}));
    EXPECT_EQ(est.value, 1.0);
    EXPECT_EQ(est.detail.at("R_n"), 3.0);
}

TEST(Drs, EverySubjectLastIsZero) {
    const auto est = drs(panel(2, 2, {0, 1, 1, 0}));
    EXPECT_EQ(est.detail.at("R_n"), 4.0);
    EXPECT_EQ(est.value, 0.0);
}

TEST(Drs, MixedRanksGiveHalf) {
    const auto est = drs(panel(2, 2, {0, 1, 0, -0.5}));
    EXPECT_EQ(est.detail.at("R_n"), 3.0);
    EXPECT_EQ(est.value, 0.5);
}

TEST(Drs, SameSessionRejected) {
    try {
        drs(oracle::random_panel(3, 2, 1, 1), 1, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SameSession);
    }
}

TEST(Drs, MatchesOracle) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto ms = oracle::random_panel(6, 3, 2, 500 + seed);
        EXPECT_NEAR(drs(ms, 0, 2).value, oracle::drs(ms, 0, 2), 1e-15);
        EXPECT_NEAR(drs(ms, 2, 1).value, oracle::drs(ms, 2, 1), 1e-15);
    }
}

TEST(Fingerprint, SeparatedTriple) {
    const auto est = fp(panel(3, 2, {0, 1, 2, 0.1, 1.1, 2.1}));
    EXPECT_EQ(est.value, 1.0);
    EXPECT_EQ(est.detail.at("T_n"), 3.0);
}

TEST(Fingerprint, OneSubjectBeaten) {
    EXPECT_DOUBLE_EQ(fp(panel(3, 2, {0, 1, 2, 0.1, -0.3, 2.1})).value, 2.0 / 3.0);
}

TEST(Fingerprint, IdenticalSubjectsGiveZero) {
    EXPECT_EQ(fp(panel(4, 2, std::vector<double>(8, 1.0))).value, 0.0);
}

TEST(Fingerprint, CountsRankOneSelfDistances) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto ms = oracle::random_panel(12, 2, 1, 900 + seed, 2.0);
        std::size_t ones = 0;
        for (std::size_t i = 0; i < 12; ++i) ones += oracle::cross_rank(ms, i, 0, 1) == 1;
        EXPECT_EQ(fp(ms).detail.at("T_n"), static_cast<double>(ones));
        EXPECT_NEAR(fp(ms).value, oracle::fingerprint(ms, 0, 1), 1e-15);
    }
}

// ---------------------------------------------------------------------------
// ANOVA-based and moment estimators
// ---------------------------------------------------------------------------

TEST(Icc, HandComputedAnova) {
    const auto est = icc_anova(panel(2, 2, {1, 5, 3, 7}));
    EXPECT_NEAR(est.detail.at("MS_B"), 16.0, 1e-12);
    EXPECT_NEAR(est.detail.at("MS_W"), 2.0, 1e-12);
    EXPECT_NEAR(est.detail.at("F"), 8.0, 1e-12);
    EXPECT_NEAR(est.value, 14.0 / 18.0, 1e-12);
}

TEST(Icc, NoWithinVarianceGivesOne) {
    EXPECT_EQ(icc_anova(panel(3, 2, {1, 2, 4, 1, 2, 4})).value, 1.0);
}

TEST(Icc, EqualMeansGiveNegativeValue) {
    const auto est = icc_anova(panel(2, 3, {0, 1, 2, 1, 1, 1}));
    EXPECT_EQ(est.detail.at("MS_B"), 0.0);
    EXPECT_NEAR(est.value, -0.5, 1e-12);
}

TEST(Icc, DegenerateAndDimensionErrors) {
    try {
        icc_anova(panel(2, 2, {3, 3, 3, 3}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateData);
    }
    try {
        icc_anova(oracle::random_panel(4, 2, 3, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimensionError);
    }
}

TEST(Icc, MatchesOracleAndIsIncreasingInF) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t s = 2 + seed % 4;
        const auto ms = oracle::random_panel(5 + seed, s, 1, 40 + seed, 0.7);
        const auto est = icc_anova(ms);
        const auto ref = oracle::anova(ms);
        EXPECT_NEAR(est.detail.at("MS_B"), ref.msb, 1e-12 * ref.msb);
        EXPECT_NEAR(est.detail.at("MS_W"), ref.msw, 1e-12 * ref.msw);
        EXPECT_NEAR(est.value, ref.icc, 1e-12);
        const double f = est.detail.at("F");
        EXPECT_NEAR(est.value, (f - 1) / (f - 1 + static_cast<double>(s)), 1e-12);
        EXPECT_GT(est.value, -1.0 / static_cast<double>(s - 1));
        EXPECT_LE(est.value, 1.0);
    }
}

TEST(I2c2, IdenticalReplicatesGiveOne) {
    const auto ms = MeasurementSet::from_values(2, 2, 2, {0, 0, 1, 2, 0, 0, 1, 2});
    EXPECT_EQ(i2c2_moments(ms).value, 1.0);
}

TEST(I2c2, MatchesPairAverageOracle) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto ms = oracle::random_panel(4 + seed, 2 + seed % 3, 3, 60 + seed, 0.5);
        EXPECT_NEAR(i2c2_moments(ms).value, oracle::i2c2(ms), 1e-12);
    }
}

TEST(I2c2, NoSubjectEffectIsNearZero) {
    const auto ms = oracle::random_panel(300, 2, 4, 8, 0.0);
    EXPECT_LT(i2c2_moments(ms).value, 0.05);
}

TEST(I2c2, AllEqualIsDegenerate) {
    const auto ms = MeasurementSet::from_values(2, 2, 2, std::vector<double>(8, 1.0));
    EXPECT_THROW(i2c2_moments(ms), Error);
}

TEST(Pca, LineDataGivesSignedPositions) {
    // Points on the line through (1, 1) with direction (3, 4) / 5.
    const std::vector<double> pos{-2.0, 1.0, 0.5, 3.5, -1.0, -2.0};
    std::vector<double> values;
    for (double p : pos) {
        values.push_back(1 + 0.6 * p);
        values.push_back(1 + 0.8 * p);
    }
    const auto scores = pca_first_component(MeasurementSet::from_values(3, 2, 2, values));
    ASSERT_EQ(scores.features(), 1u);
    const double mean = std::accumulate(pos.begin(), pos.end(), 0.0) / 6;
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(scores.values()[k], pos[k] - mean, 1e-12);
}

TEST(Pca, IccInvariantToSign) {
    const auto ms = oracle::random_panel(10, 3, 4, 12);
    std::vector<double> flipped(ms.values().begin(), ms.values().end());
    for (auto& v : flipped) v = -v;
    const auto neg = MeasurementSet::from_values(10, 3, 4, flipped);
    EXPECT_NEAR(pca_icc(ms).value, pca_icc(neg).value, 1e-12);
}

TEST(Pca, Errors) {
    try {
        pca_first_component(oracle::random_panel(4, 2, 1, 3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimensionError);
    }
    try {
        pca_first_component(MeasurementSet::from_values(2, 2, 3, std::vector<double>(12, 4.0)));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::RankDeficient);
    }
}

// ---------------------------------------------------------------------------
// Multi-batch strategies
// ---------------------------------------------------------------------------

TEST(MultiBatch, SixNamedStrategies) {
    const auto all = MultiBatchStrategy::all();
    ASSERT_EQ(all.size(), 6u);
    for (const auto& s : all) EXPECT_EQ(MultiBatchStrategy::parse(s.name()), s);
    EXPECT_THROW(MultiBatchStrategy::parse("dtilde:middle"), Error);
}

TEST(MultiBatch, TwoSessionsCoincideWithPlainStatistics) {
    const auto ms = oracle::random_panel(9, 2, 2, 14);
    for (const auto& strategy : MultiBatchStrategy::all()) {
        const double v = multibatch_estimate(ms, strategy).value;
        const double plain = strategy.base == RankBase::Dtilde ? dtilde(ms) : drs(ms).value;
        EXPECT_NEAR(v, plain, 1e-15) << strategy.name();
    }
}

TEST(MultiBatch, AveragesMatchOracles) {
    const std::size_t s = 5;
    const auto ms = oracle::random_panel(6, s, 1, 15);
    auto sub = [&](std::size_t a, std::size_t b) {
        const std::vector<std::size_t> keep{a, b};
        return ms.select_sessions(keep);
    };
    double rest_dt = 0;
    double rest_rs = 0;
    double all_rs = 0;
    for (std::size_t t = 1; t < s; ++t) {
        rest_dt += oracle::dtilde(sub(0, t)) / (s - 1);
        rest_rs += oracle::drs(ms, 0, t) / (s - 1);
    }
    for (std::size_t t = 0; t < s; ++t)
        for (std::size_t u = t + 1; u < s; ++u) all_rs += oracle::drs(ms, t, u) / 10.0;

    auto est = [&](Pairing p, RankBase b) { return multibatch_estimate(ms, {p, b}).value; };
    EXPECT_NEAR(est(Pairing::FirstLast, RankBase::Dtilde), oracle::dtilde(sub(0, s - 1)), 1e-14);
    EXPECT_NEAR(est(Pairing::FirstLast, RankBase::Drs), oracle::drs(ms, 0, s - 1), 1e-14);
    EXPECT_NEAR(est(Pairing::AllBatches, RankBase::Dtilde), oracle::dtilde(ms), 1e-14);
    EXPECT_NEAR(est(Pairing::AllBatches, RankBase::Drs), all_rs, 1e-14);
    EXPECT_NEAR(est(Pairing::FirstRest, RankBase::Dtilde), rest_dt, 1e-14);
    EXPECT_NEAR(est(Pairing::FirstRest, RankBase::Drs), rest_rs, 1e-14);
}

// ---------------------------------------------------------------------------
// Properties over random panels
// ---------------------------------------------------------------------------

TEST(Properties, DFamilyStaysInUnitInterval) {
    std::mt19937_64 gen(3);
    std::uniform_int_distribution<int> coarse(0, 2);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 2 + trial % 6;
        const std::size_t s = 2 + trial % 3;
        auto ms = oracle::random_panel(n, s, 2, 700 + trial);
        if (trial % 2) {
            std::vector<double> v(n * s * 2);
            for (auto& x : v) x = coarse(gen);
            ms = MeasurementSet::from_values(n, s, 2, v);
        }
        const auto dm = pairwise_distances(ms);
        for (double v : {sample_discriminability(dm).value, rank_discriminability(dm).value,
                         ranksum_discriminability(dm, 0, 1).value, fingerprint_index(dm, 0, 1).value}) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Properties, MonotoneTransformInvariance) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto dm = pairwise_distances(oracle::random_panel(7, 3, 2, 800 + seed));
        const auto g = dm.transformed([](double d) { return std::exp(d) + d * d * d; });
        EXPECT_EQ(sample_discriminability(dm).value, sample_discriminability(g).value);
        EXPECT_EQ(rank_discriminability(dm).value, rank_discriminability(g).value);
        EXPECT_EQ(ranksum_discriminability(dm, 0, 2).value, ranksum_discriminability(g, 0, 2).value);
        EXPECT_EQ(fingerprint_index(dm, 1, 2).value, fingerprint_index(g, 1, 2).value);
    }
}

TEST(Properties, SubjectRelabelingInvariance) {
    std::mt19937_64 gen(99);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto ms = oracle::random_panel(8, 3, 1, 850 + seed, 1.5);
        std::vector<std::size_t> order(8);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), gen);
        const auto re = relabel(ms, order);
        EXPECT_NEAR(dhat(ms), dhat(re), 1e-15);
        EXPECT_NEAR(dtilde(ms), dtilde(re), 1e-15);
        EXPECT_NEAR(drs(ms).value, drs(re).value, 1e-15);
        EXPECT_NEAR(fp(ms).value, fp(re).value, 1e-15);
        EXPECT_NEAR(icc_anova(ms).value, icc_anova(re).value, 1e-12);
        EXPECT_NEAR(i2c2_moments(ms).value, i2c2_moments(re).value, 1e-12);
    }
}
