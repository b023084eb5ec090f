#ifndef REPEATR_ESTIMATORS_HPP
#define REPEATR_ESTIMATORS_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "repeatr/core.hpp"
#include "repeatr/metrics.hpp"

namespace repeatr {

enum class EstimateKind { Dhat, Dtilde, Drs, Fingerprint, Icc, I2c2, PcaIcc };

std::string_view to_string(EstimateKind kind);

struct RepeatabilityEstimate {
    EstimateKind kind;
    double value;
    std::size_t subjects;
    std::size_t sessions;
    std::size_t features;
    /// Auxiliary quantities: F, MS_B, MS_W for ICC; R_n for Drs; T_n for
    /// the fingerprint index.
    std::map<std::string, double> detail;
};

enum class Pairing { FirstLast, AllBatches, FirstRest };
enum class RankBase { Dtilde, Drs };

/// One of the six ways of scoring a panel with more than two sessions.
struct MultiBatchStrategy {
    Pairing pairing;
    RankBase base;

    static std::vector<MultiBatchStrategy> all();
    std::string name() const;
    static MultiBatchStrategy parse(std::string_view text);
    bool operator==(const MultiBatchStrategy&) const = default;
};

std::string_view to_string(Pairing pairing);

/// Fraction of (i, t, t', i', t'') comparisons where the within-subject
/// distance is strictly smaller than the between-subject one.
RepeatabilityEstimate sample_discriminability(const CombinedDistanceMatrix& dm);

/// Discriminability from max-tie ranks within rows of the full combined
/// matrix. Equals `sample_discriminability + (s-2)/(2(n-1)s)` without ties.
RepeatabilityEstimate rank_discriminability(const CombinedDistanceMatrix& dm);

/// Mann-Whitney style estimate from the ranks of self-distances within the
/// rows of the cross-session block (t1, t2). Sessions are 0-based.
RepeatabilityEstimate ranksum_discriminability(const CombinedDistanceMatrix& dm, std::size_t t1,
                                               std::size_t t2);

/// Fraction of subjects whose t1 measurement is strictly closest to their own
/// t2 measurement.
RepeatabilityEstimate fingerprint_index(const CombinedDistanceMatrix& dm, std::size_t t1,
                                        std::size_t t2);

struct AnovaTable {
    double ms_between;
    double ms_within;
    double f;
    double icc;
};

/// One-way random-effects ANOVA on univariate data.
RepeatabilityEstimate icc_anova(const MeasurementSet& ms);

/// Moment estimate of the trace intraclass correlation, clamped to [0, 1].
RepeatabilityEstimate i2c2_moments(const MeasurementSet& ms);

/// Scores on the first principal component of the pooled measurements.
MeasurementSet pca_first_component(const MeasurementSet& ms);

/// ICC of the first principal component scores.
RepeatabilityEstimate pca_icc(const MeasurementSet& ms);

RepeatabilityEstimate multibatch_estimate(const MeasurementSet& ms, MultiBatchStrategy strategy,
                                          Metric metric = Metric::Euclidean);
RepeatabilityEstimate multibatch_estimate(const CombinedDistanceMatrix& dm,
                                          MultiBatchStrategy strategy);

} // namespace repeatr

#endif
