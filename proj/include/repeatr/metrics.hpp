#ifndef REPEATR_METRICS_HPP
#define REPEATR_METRICS_HPP

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "repeatr/core.hpp"

namespace repeatr {

enum class Metric { Euclidean, OneMinusPearson };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);

/**
 * Dense (n*s) x (n*s) matrix of distances between all measurements of a
 * panel. Row/column `t * n + i` is subject `i` at session `t`, so the matrix
 * is an s x s arrangement of n x n blocks; block (t, t') holds the distances
 * between session-t and session-t' measurements.
 */
class CombinedDistanceMatrix {
public:
    CombinedDistanceMatrix(std::size_t subjects, std::size_t sessions, Metric metric,
                           std::vector<double> entries);

    std::size_t subjects() const noexcept { return subjects_; }
    std::size_t sessions() const noexcept { return sessions_; }
    std::size_t order() const noexcept { return subjects_ * sessions_; }
    Metric metric() const noexcept { return metric_; }

    double operator()(std::size_t row, std::size_t col) const noexcept {
        return entries_[row * order() + col];
    }
    /// Distance between subject `i` at session `t` and subject `j` at session `u`.
    double at(std::size_t i, std::size_t t, std::size_t j, std::size_t u) const noexcept {
        return (*this)(t * subjects_ + i, u * subjects_ + j);
    }
    std::span<const double> row(std::size_t r) const noexcept {
        return std::span<const double>(entries_).subspan(r * order(), order());
    }
    std::span<const double> entries() const noexcept { return entries_; }

    /// Restriction to the listed sessions, in the given order.
    CombinedDistanceMatrix select_sessions(std::span<const std::size_t> sessions) const;

    /// Entry-wise application of `f`, which should be strictly increasing.
    template <typename F>
    CombinedDistanceMatrix transformed(F&& f) const {
        std::vector<double> out(entries_.size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = f(entries_[k]);
        return CombinedDistanceMatrix(subjects_, sessions_, metric_, std::move(out));
    }

private:
    std::size_t subjects_;
    std::size_t sessions_;
    Metric metric_;
    std::vector<double> entries_;
};

/// Distance between two measurement vectors.
double distance(std::span<const double> a, std::span<const double> b, Metric metric);

/**
 * All pairwise distances of `ms`. For `OneMinusPearson` every vector must
 * have at least two features and non-zero variance.
 */
CombinedDistanceMatrix pairwise_distances(const MeasurementSet& ms, Metric metric = Metric::Euclidean);

/// Row-major integer ranks; 0 marks an excluded self column.
struct RankMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> ranks;

    std::size_t operator()(std::size_t r, std::size_t c) const { return ranks[r * cols + c]; }
};

/**
 * Ranks every row independently, ties sharing the maximum rank of their
 * group. With `exclude_self_column` the input must be square; the diagonal
 * entry of each row is left out of its row's ranking and reported as rank 0.
 */
RankMatrix rank_rows_max_ties(std::span<const double> values, std::size_t rows, std::size_t cols,
                              bool exclude_self_column = false);

/// Max-tie ranks of a single sequence.
std::vector<std::size_t> rank_max_ties(std::span<const double> values);

} // namespace repeatr

#endif
