#ifndef REPEATR_ENGINE_HPP
#define REPEATR_ENGINE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "repeatr/core.hpp"
#include "repeatr/estimators.hpp"
#include "repeatr/metrics.hpp"

// Statistic kernels that can be re-evaluated under within-session
// relabelings of the subjects without recomputing any distance.
//
// Permuting subject labels inside each session leaves the multiset of every
// row of the distance matrix unchanged; only which entries count as
// "same subject" moves. Each kernel therefore sorts its rows once and answers
// every rank query by binary search.

namespace repeatr {

/// `slot[t][i]` is the session-t row index holding the measurement treated as
/// subject i's. The identity assignment reproduces the observed panel.
using SessionAssignment = std::vector<std::vector<std::size_t>>;

SessionAssignment identity_assignment(std::size_t subjects, std::size_t sessions);

/// Sorted rows of the combined matrix restricted to a set of sessions.
/// Serves both the strict-inequality and the max-tie rank forms.
class RankedRows {
public:
    RankedRows(std::shared_ptr<const CombinedDistanceMatrix> dm, std::vector<std::size_t> sessions);

    double dhat(const SessionAssignment& slot) const;
    double dtilde(const SessionAssignment& slot) const;

    const std::vector<std::size_t>& sessions() const noexcept { return sessions_; }

private:
    struct Tally {
        std::uint64_t wins = 0;     // strict-inequality indicator terms
        std::uint64_t rank_sum = 0; // sum of max-tie self ranks
    };
    Tally tally(const SessionAssignment& slot) const;

    std::shared_ptr<const CombinedDistanceMatrix> dm_;
    std::vector<std::size_t> sessions_;
    std::size_t width_;
    std::vector<double> sorted_; // row-major, width_ x width_
};

/// Rows of the cross-session block (t1, t2), each sorted.
class CrossBlockRanks {
public:
    CrossBlockRanks(std::shared_ptr<const CombinedDistanceMatrix> dm, std::size_t t1, std::size_t t2);

    /// R_n: sum over subjects of the max-tie rank of the self-distance.
    std::size_t rank_sum(const SessionAssignment& slot) const;
    /// T_n: subjects whose self-distance is the strict row minimum.
    std::size_t matches(const SessionAssignment& slot) const;

    double drs(const SessionAssignment& slot) const;
    double fingerprint(const SessionAssignment& slot) const;

private:
    std::size_t self_rank(const SessionAssignment& slot, std::size_t subject) const;

    std::shared_ptr<const CombinedDistanceMatrix> dm_;
    std::size_t t1_;
    std::size_t t2_;
    std::vector<double> sorted_; // n x n
};

/// One-way ANOVA of univariate scores stored session-major (n * s values).
AnovaTable anova_table(std::span<const double> scores, std::size_t subjects, std::size_t sessions,
                       const SessionAssignment& slot);

/// Moment I2C2 of `ms` under a relabeling. Throws DegenerateData when all
/// measurements coincide.
double i2c2_value(const MeasurementSet& ms, const SessionAssignment& slot);

enum class StatisticKind { Dhat, Dtilde, Drs, Fingerprint, Icc, F, I2c2, PcaIcc };

/**
 * A statistic to compute on a panel. `strategy` selects one of the
 * multi-batch variants for Dtilde and Drs; `pair` the sessions compared by
 * Drs and the fingerprint index (default: the first two).
 */
struct StatisticSpec {
    StatisticKind kind = StatisticKind::Dtilde;
    Metric metric = Metric::Euclidean;
    std::optional<MultiBatchStrategy> strategy;
    std::optional<std::pair<std::size_t, std::size_t>> pair;

    /// "dhat", "dtilde", "drs", "fingerprint", "icc", "f", "i2c2", "pca-icc",
    /// optionally suffixed with ":first-last", ":all-batches" or
    /// ":first-rest" for dtilde and drs.
    std::string name() const;
    static StatisticSpec parse(std::string_view text, Metric metric = Metric::Euclidean);
};

using StatisticFunction = std::function<double(const SessionAssignment&)>;

/// Caches distance matrices and rank kernels of one panel so that several
/// statistics, and many relabelings, share them. Not thread-safe; the
/// functions it returns are safe to call concurrently.
class PanelEngine {
public:
    explicit PanelEngine(MeasurementSet ms);

    const MeasurementSet& panel() const noexcept { return *ms_; }
    std::shared_ptr<const CombinedDistanceMatrix> distances(Metric metric);

    StatisticFunction statistic(const StatisticSpec& spec);
    double observed(const StatisticSpec& spec);

private:
    std::shared_ptr<const RankedRows> ranked_rows(Metric metric, std::vector<std::size_t> sessions);
    std::shared_ptr<const CrossBlockRanks> cross_block(Metric metric, std::size_t t1, std::size_t t2);
    std::shared_ptr<const std::vector<double>> univariate_scores(bool pca);

    std::shared_ptr<const MeasurementSet> ms_;
    std::map<Metric, std::shared_ptr<const CombinedDistanceMatrix>> distances_;
    std::map<std::pair<Metric, std::vector<std::size_t>>, std::shared_ptr<const RankedRows>> rows_;
    std::map<std::tuple<Metric, std::size_t, std::size_t>, std::shared_ptr<const CrossBlockRanks>> blocks_;
    std::map<bool, std::shared_ptr<const std::vector<double>>> scores_;
};

} // namespace repeatr

#endif
