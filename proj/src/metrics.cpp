#include "repeatr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace repeatr {

std::string_view to_string(Metric metric) {
    switch (metric) {
    case Metric::Euclidean: return "euclidean";
    case Metric::OneMinusPearson: return "one-minus-pearson";
    }
    return "unknown";
}

Metric parse_metric(std::string_view text) {
    if (text == "euclidean") return Metric::Euclidean;
    if (text == "one-minus-pearson") return Metric::OneMinusPearson;
    throw Error(ErrorKind::ConfigError, "metric: unknown metric '" + std::string(text) + "'");
}

CombinedDistanceMatrix::CombinedDistanceMatrix(std::size_t subjects, std::size_t sessions,
                                               Metric metric, std::vector<double> entries)
    : subjects_(subjects), sessions_(sessions), metric_(metric), entries_(std::move(entries)) {
    if (entries_.size() != order() * order()) {
        throw Error(ErrorKind::ShapeError, "distance matrix entry count does not match (n*s)^2");
    }
}

CombinedDistanceMatrix CombinedDistanceMatrix::select_sessions(
    std::span<const std::size_t> sessions) const {
    const auto n = subjects_;
    const auto m = sessions.size() * n;
    std::vector<double> out(m * m);
    for (std::size_t a = 0; a < sessions.size(); ++a) {
        for (std::size_t b = 0; b < sessions.size(); ++b) {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    out[(a * n + i) * m + b * n + j] = at(i, sessions[a], j, sessions[b]);
                }
            }
        }
    }
    return CombinedDistanceMatrix(n, sessions.size(), metric_, std::move(out));
}

namespace {

double euclidean(std::span<const double> a, std::span<const double> b) {
    double sum = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        sum += d * d;
    }
    return std::sqrt(sum);
}

struct Standardized {
    std::vector<double> centered;
    double norm;
};

Standardized center(std::span<const double> v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    Standardized out{std::vector<double>(v.size()), 0.0};
    double ss = 0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        out.centered[k] = v[k] - mean;
        ss += out.centered[k] * out.centered[k];
    }
    out.norm = std::sqrt(ss);
    return out;
}

// Sample correlation; the (l - 1) denominators cancel.
double one_minus_pearson(const Standardized& a, const Standardized& b) {
    double dot = 0;
    for (std::size_t k = 0; k < a.centered.size(); ++k) dot += a.centered[k] * b.centered[k];
    const double r = std::clamp(dot / (a.norm * b.norm), -1.0, 1.0);
    return std::max(0.0, 1.0 - r);
}

void require_pearson_ready(std::span<const double> v) {
    if (v.size() < 2) {
        throw Error(ErrorKind::DimensionTooSmall,
                    "one-minus-pearson distance needs at least 2 features");
    }
    if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) {
        throw Error(ErrorKind::ConstantVector,
                    "one-minus-pearson distance is undefined for a constant vector");
    }
}

} // namespace

double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::ShapeError, "vectors differ in length");
    }
    if (metric == Metric::Euclidean) {
        return euclidean(a, b);
    }
    require_pearson_ready(a);
    require_pearson_ready(b);
    return one_minus_pearson(center(a), center(b));
}

CombinedDistanceMatrix pairwise_distances(const MeasurementSet& ms, Metric metric) {
    const auto m = ms.measurements();
    std::vector<double> out(m * m, 0.0);

    if (metric == Metric::Euclidean) {
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = r + 1; c < m; ++c) {
                const double d = euclidean(ms.row(r), ms.row(c));
                out[r * m + c] = d;
                out[c * m + r] = d;
            }
        }
    } else {
        std::vector<Standardized> rows;
        rows.reserve(m);
        for (std::size_t r = 0; r < m; ++r) {
            require_pearson_ready(ms.row(r));
            rows.push_back(center(ms.row(r)));
        }
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t c = r + 1; c < m; ++c) {
                const double d = one_minus_pearson(rows[r], rows[c]);
                out[r * m + c] = d;
                out[c * m + r] = d;
            }
        }
    }
    return CombinedDistanceMatrix(ms.subjects(), ms.sessions(), metric, std::move(out));
}

std::vector<std::size_t> rank_max_ties(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::size_t> ranks(values.size());
    std::size_t start = 0;
    while (start < order.size()) {
        std::size_t end = start + 1;
        while (end < order.size() && values[order[end]] == values[order[start]]) ++end;
        for (std::size_t k = start; k < end; ++k) ranks[order[k]] = end;
        start = end;
    }
    return ranks;
}

RankMatrix rank_rows_max_ties(std::span<const double> values, std::size_t rows, std::size_t cols,
                              bool exclude_self_column) {
    if (values.size() != rows * cols) {
        throw Error(ErrorKind::ShapeError, "rank input is not rectangular");
    }
    if (exclude_self_column && rows != cols) {
        throw Error(ErrorKind::ShapeError, "excluding the self column needs a square matrix");
    }
    RankMatrix out{rows, cols, std::vector<std::size_t>(rows * cols, 0)};
    std::vector<double> buffer;
    for (std::size_t r = 0; r < rows; ++r) {
        auto row = values.subspan(r * cols, cols);
        if (!exclude_self_column) {
            auto ranks = rank_max_ties(row);
            std::copy(ranks.begin(), ranks.end(), out.ranks.begin() + static_cast<std::ptrdiff_t>(r * cols));
            continue;
        }
        buffer.clear();
        for (std::size_t c = 0; c < cols; ++c) {
            if (c != r) buffer.push_back(row[c]);
        }
        auto ranks = rank_max_ties(buffer);
        for (std::size_t c = 0, k = 0; c < cols; ++c) {
            if (c != r) out.ranks[r * cols + c] = ranks[k++];
        }
    }
    return out;
}

} // namespace repeatr
