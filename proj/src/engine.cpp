#include "repeatr/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace repeatr {

SessionAssignment identity_assignment(std::size_t subjects, std::size_t sessions) {
    SessionAssignment slot(sessions, std::vector<std::size_t>(subjects));
    for (auto& row : slot) std::iota(row.begin(), row.end(), std::size_t{0});
    return slot;
}

namespace {

// Count of entries <= value, i.e. the max-tie rank of `value` in the row.
std::size_t max_tie_rank(std::span<const double> sorted_row, double value) {
    return static_cast<std::size_t>(
        std::upper_bound(sorted_row.begin(), sorted_row.end(), value) - sorted_row.begin());
}

void require_valid_sessions(const CombinedDistanceMatrix& dm, std::span<const std::size_t> sessions) {
    if (dm.subjects() < 2) {
        throw Error(ErrorKind::ShapeError, "need at least 2 subjects");
    }
    for (auto t : sessions) {
        if (t >= dm.sessions()) throw Error(ErrorKind::ShapeError, "session index out of range");
    }
}

} // namespace

RankedRows::RankedRows(std::shared_ptr<const CombinedDistanceMatrix> dm, std::vector<std::size_t> sessions)
    : dm_(std::move(dm)), sessions_(std::move(sessions)) {
    require_valid_sessions(*dm_, sessions_);
    if (sessions_.size() < 2) {
        throw Error(ErrorKind::ShapeError, "need at least 2 sessions");
    }
    const auto n = dm_->subjects();
    width_ = sessions_.size() * n;
    sorted_.resize(width_ * width_);
    for (std::size_t p = 0; p < sessions_.size(); ++p) {
        for (std::size_t j = 0; j < n; ++j) {
            auto out = sorted_.begin() + static_cast<std::ptrdiff_t>((p * n + j) * width_);
            auto row = dm_->row(sessions_[p] * n + j);
            for (std::size_t q = 0; q < sessions_.size(); ++q) {
                auto block = row.subspan(sessions_[q] * n, n);
                out = std::copy(block.begin(), block.end(), out);
            }
            std::sort(out - static_cast<std::ptrdiff_t>(width_), out);
        }
    }
}

RankedRows::Tally RankedRows::tally(const SessionAssignment& slot) const {
    const auto n = dm_->subjects();
    const auto m = sessions_.size();
    std::vector<double> same(m);
    Tally out;
    for (std::size_t p = 0; p < m; ++p) {
        const auto t = sessions_[p];
        for (std::size_t i = 0; i < n; ++i) {
            const auto j = slot[t][i];
            const auto global_row = t * n + j;
            std::span<const double> sorted_row(sorted_.data() + (p * n + j) * width_, width_);
            for (std::size_t q = 0; q < m; ++q) {
                same[q] = (*dm_)(global_row, sessions_[q] * n + slot[sessions_[q]][i]);
            }
            for (std::size_t q = 0; q < m; ++q) {
                if (q == p) continue;
                const double d = same[q];
                const auto rank = max_tie_rank(sorted_row, d);
                const auto same_greater = static_cast<std::size_t>(
                    std::count_if(same.begin(), same.end(), [d](double x) { return x > d; }));
                out.rank_sum += rank;
                out.wins += (width_ - rank) - same_greater;
            }
        }
    }
    return out;
}

double RankedRows::dhat(const SessionAssignment& slot) const {
    const auto n = static_cast<double>(dm_->subjects());
    const auto m = static_cast<double>(sessions_.size());
    return static_cast<double>(tally(slot).wins) / (n * m * (m - 1) * (n - 1) * m);
}

double RankedRows::dtilde(const SessionAssignment& slot) const {
    const auto n = static_cast<double>(dm_->subjects());
    const auto m = static_cast<double>(sessions_.size());
    const double top = n * n * m * m * (m - 1);
    return (top - static_cast<double>(tally(slot).rank_sum)) / (n * m * (m - 1) * (n - 1) * m);
}

CrossBlockRanks::CrossBlockRanks(std::shared_ptr<const CombinedDistanceMatrix> dm, std::size_t t1,
                                 std::size_t t2)
    : dm_(std::move(dm)), t1_(t1), t2_(t2) {
    const std::size_t pair[] = {t1, t2};
    require_valid_sessions(*dm_, pair);
    if (t1 == t2) {
        throw Error(ErrorKind::SameSession, "cross-session statistics need two distinct sessions");
    }
    const auto n = dm_->subjects();
    sorted_.resize(n * n);
    for (std::size_t j = 0; j < n; ++j) {
        auto block = dm_->row(t1 * n + j).subspan(t2 * n, n);
        auto out = sorted_.begin() + static_cast<std::ptrdiff_t>(j * n);
        std::copy(block.begin(), block.end(), out);
        std::sort(out, out + static_cast<std::ptrdiff_t>(n));
    }
}

std::size_t CrossBlockRanks::self_rank(const SessionAssignment& slot, std::size_t subject) const {
    const auto n = dm_->subjects();
    const auto j = slot[t1_][subject];
    const auto k = slot[t2_][subject];
    std::span<const double> sorted_row(sorted_.data() + j * n, n);
    return max_tie_rank(sorted_row, dm_->at(j, t1_, k, t2_));
}

std::size_t CrossBlockRanks::rank_sum(const SessionAssignment& slot) const {
    std::size_t total = 0;
    for (std::size_t i = 0; i < dm_->subjects(); ++i) total += self_rank(slot, i);
    return total;
}

std::size_t CrossBlockRanks::matches(const SessionAssignment& slot) const {
    std::size_t total = 0;
    for (std::size_t i = 0; i < dm_->subjects(); ++i) total += self_rank(slot, i) == 1 ? 1 : 0;
    return total;
}

double CrossBlockRanks::drs(const SessionAssignment& slot) const {
    const auto n = static_cast<double>(dm_->subjects());
    return (n * n - static_cast<double>(rank_sum(slot))) / (n * (n - 1));
}

double CrossBlockRanks::fingerprint(const SessionAssignment& slot) const {
    return static_cast<double>(matches(slot)) / static_cast<double>(dm_->subjects());
}

AnovaTable anova_table(std::span<const double> scores, std::size_t subjects, std::size_t sessions,
                       const SessionAssignment& slot) {
    const auto n = subjects;
    const auto s = sessions;
    if (scores.size() != n * s || n < 2 || s < 2) {
        throw Error(ErrorKind::ShapeError, "ANOVA needs n >= 2 subjects and s >= 2 sessions");
    }
    // Shifting by a data value keeps identical inputs exactly zero.
    const double origin = scores[0];
    std::vector<double> means(n, 0.0);
    double grand = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < s; ++t) means[i] += scores[t * n + slot[t][i]] - origin;
        grand += means[i];
        means[i] /= static_cast<double>(s);
    }
    grand /= static_cast<double>(n * s);

    double between = 0;
    double within = 0;
    for (std::size_t i = 0; i < n; ++i) {
        between += (means[i] - grand) * (means[i] - grand);
        for (std::size_t t = 0; t < s; ++t) {
            const double r = scores[t * n + slot[t][i]] - origin - means[i];
            within += r * r;
        }
    }
    AnovaTable out{};
    out.ms_between = static_cast<double>(s) * between / static_cast<double>(n - 1);
    out.ms_within = within / static_cast<double>(n * (s - 1));
    if (out.ms_between == 0 && out.ms_within == 0) {
        throw Error(ErrorKind::DegenerateData, "all values are identical; ANOVA is undefined");
    }
    out.f = out.ms_within > 0 ? out.ms_between / out.ms_within : std::numeric_limits<double>::infinity();
    out.icc = (out.ms_between - out.ms_within) /
              (out.ms_between + static_cast<double>(s - 1) * out.ms_within);
    return out;
}

double i2c2_value(const MeasurementSet& ms, const SessionAssignment& slot) {
    const auto n = ms.subjects();
    const auto s = ms.sessions();
    const auto l = ms.features();
    const auto total_count = ms.measurements();
    auto origin = ms.row(0);

    std::vector<double> mean(l, 0.0);
    for (std::size_t r = 0; r < total_count; ++r) {
        auto x = ms.row(r);
        for (std::size_t k = 0; k < l; ++k) mean[k] += x[k] - origin[k];
    }
    for (auto& v : mean) v /= static_cast<double>(total_count);
    double spread = 0;
    for (std::size_t r = 0; r < total_count; ++r) {
        auto x = ms.row(r);
        for (std::size_t k = 0; k < l; ++k) {
            const double d = x[k] - origin[k] - mean[k];
            spread += d * d;
        }
    }
    // Sum over all unordered pairs of squared distances.
    const double all_pairs = static_cast<double>(total_count) * spread;

    double within = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < s; ++t) {
            auto a = ms.at(slot[t][i], t);
            for (std::size_t u = t + 1; u < s; ++u) {
                auto b = ms.at(slot[u][i], u);
                for (std::size_t k = 0; k < l; ++k) within += (a[k] - b[k]) * (a[k] - b[k]);
            }
        }
    }
    const double within_pairs = static_cast<double>(n * s * (s - 1)) / 2.0;
    const double between_pairs = static_cast<double>(n * (n - 1) * s * s) / 2.0;
    const double w = within / within_pairs;
    const double b = std::max(0.0, all_pairs - within) / between_pairs;
    if (!(b > 0)) {
        throw Error(ErrorKind::DegenerateData, "all between-subject distances are zero; I2C2 is undefined");
    }
    return std::clamp(1.0 - w / b, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// StatisticSpec
// ---------------------------------------------------------------------------

std::string StatisticSpec::name() const {
    std::string base;
    switch (kind) {
    case StatisticKind::Dhat: base = "dhat"; break;
    case StatisticKind::Dtilde: base = "dtilde"; break;
    case StatisticKind::Drs: base = "drs"; break;
    case StatisticKind::Fingerprint: base = "fingerprint"; break;
    case StatisticKind::Icc: base = "icc"; break;
    case StatisticKind::F: base = "f"; break;
    case StatisticKind::I2c2: base = "i2c2"; break;
    case StatisticKind::PcaIcc: base = "pca-icc"; break;
    }
    if (strategy) {
        base += ":";
        base += to_string(strategy->pairing);
    }
    return base;
}

StatisticSpec StatisticSpec::parse(std::string_view text, Metric metric) {
    StatisticSpec spec;
    spec.metric = metric;
    auto colon = text.find(':');
    auto head = text.substr(0, colon);
    static const std::pair<std::string_view, StatisticKind> kinds[] = {
        {"dhat", StatisticKind::Dhat},   {"dtilde", StatisticKind::Dtilde},
        {"drs", StatisticKind::Drs},     {"fingerprint", StatisticKind::Fingerprint},
        {"icc", StatisticKind::Icc},     {"f", StatisticKind::F},
        {"i2c2", StatisticKind::I2c2},   {"pca-icc", StatisticKind::PcaIcc},
    };
    auto it = std::find_if(std::begin(kinds), std::end(kinds),
                           [&](const auto& entry) { return entry.first == head; });
    if (it == std::end(kinds)) {
        throw Error(ErrorKind::ConfigError, "unknown statistic '" + std::string(text) + "'");
    }
    spec.kind = it->second;
    if (colon != std::string_view::npos) {
        if (spec.kind != StatisticKind::Dtilde && spec.kind != StatisticKind::Drs) {
            throw Error(ErrorKind::ConfigError,
                        "only dtilde and drs take a multi-batch pairing: '" + std::string(text) + "'");
        }
        spec.strategy = MultiBatchStrategy::parse(text);
    }
    return spec;
}

// ---------------------------------------------------------------------------
// PanelEngine
// ---------------------------------------------------------------------------

PanelEngine::PanelEngine(MeasurementSet ms)
    : ms_(std::make_shared<const MeasurementSet>(std::move(ms))) {}

std::shared_ptr<const CombinedDistanceMatrix> PanelEngine::distances(Metric metric) {
    auto& slot = distances_[metric];
    if (!slot) slot = std::make_shared<const CombinedDistanceMatrix>(pairwise_distances(*ms_, metric));
    return slot;
}

std::shared_ptr<const RankedRows> PanelEngine::ranked_rows(Metric metric, std::vector<std::size_t> sessions) {
    auto& slot = rows_[{metric, sessions}];
    if (!slot) slot = std::make_shared<const RankedRows>(distances(metric), std::move(sessions));
    return slot;
}

std::shared_ptr<const CrossBlockRanks> PanelEngine::cross_block(Metric metric, std::size_t t1, std::size_t t2) {
    auto& slot = blocks_[{metric, t1, t2}];
    if (!slot) slot = std::make_shared<const CrossBlockRanks>(distances(metric), t1, t2);
    return slot;
}

std::shared_ptr<const std::vector<double>> PanelEngine::univariate_scores(bool pca) {
    auto& slot = scores_[pca];
    if (!slot) {
        if (pca) {
            auto scores = pca_first_component(*ms_);
            slot = std::make_shared<const std::vector<double>>(scores.values().begin(), scores.values().end());
        } else {
            if (ms_->features() != 1) {
                throw Error(ErrorKind::DimensionError,
                            "ICC needs univariate data (l = 1); use the PCA variant for l > 1");
            }
            slot = std::make_shared<const std::vector<double>>(ms_->values().begin(), ms_->values().end());
        }
    }
    return slot;
}

StatisticFunction PanelEngine::statistic(const StatisticSpec& spec) {
    const auto n = ms_->subjects();
    const auto s = ms_->sessions();
    const auto metric = spec.metric;
    std::vector<std::size_t> all(s);
    std::iota(all.begin(), all.end(), std::size_t{0});

    auto first_two = [&]() -> std::pair<std::size_t, std::size_t> {
        return spec.pair.value_or(std::pair<std::size_t, std::size_t>{0, 1});
    };

    switch (spec.kind) {
    case StatisticKind::Dhat: {
        auto rows = ranked_rows(metric, all);
        return [rows](const SessionAssignment& a) { return rows->dhat(a); };
    }
    case StatisticKind::Fingerprint: {
        auto [t1, t2] = first_two();
        auto block = cross_block(metric, t1, t2);
        return [block](const SessionAssignment& a) { return block->fingerprint(a); };
    }
    case StatisticKind::Dtilde:
    case StatisticKind::Drs: {
        const bool ranksum = spec.kind == StatisticKind::Drs;
        if (ranksum && spec.pair && !spec.strategy) {
            auto block = cross_block(metric, spec.pair->first, spec.pair->second);
            return [block](const SessionAssignment& a) { return block->drs(a); };
        }
        const auto pairing = spec.strategy ? spec.strategy->pairing : Pairing::AllBatches;
        if (ranksum) {
            std::vector<std::shared_ptr<const CrossBlockRanks>> blocks;
            if (pairing == Pairing::FirstLast) {
                blocks.push_back(cross_block(metric, 0, s - 1));
            } else if (pairing == Pairing::FirstRest) {
                for (std::size_t t = 1; t < s; ++t) blocks.push_back(cross_block(metric, 0, t));
            } else {
                for (std::size_t t = 0; t < s; ++t) {
                    for (std::size_t u = t + 1; u < s; ++u) blocks.push_back(cross_block(metric, t, u));
                }
            }
            return [blocks](const SessionAssignment& a) {
                double sum = 0;
                for (const auto& b : blocks) sum += b->drs(a);
                return sum / static_cast<double>(blocks.size());
            };
        }
        std::vector<std::shared_ptr<const RankedRows>> subsets;
        if (pairing == Pairing::FirstLast) {
            subsets.push_back(ranked_rows(metric, {0, s - 1}));
        } else if (pairing == Pairing::FirstRest) {
            for (std::size_t t = 1; t < s; ++t) subsets.push_back(ranked_rows(metric, {0, t}));
        } else {
            subsets.push_back(ranked_rows(metric, all));
        }
        return [subsets](const SessionAssignment& a) {
            double sum = 0;
            for (const auto& r : subsets) sum += r->dtilde(a);
            return sum / static_cast<double>(subsets.size());
        };
    }
    case StatisticKind::Icc:
    case StatisticKind::PcaIcc:
    case StatisticKind::F: {
        auto scores = univariate_scores(spec.kind == StatisticKind::PcaIcc);
        const bool want_f = spec.kind == StatisticKind::F;
        // Validate once on the observed panel so errors surface here.
        anova_table(*scores, n, s, identity_assignment(n, s));
        return [scores, n, s, want_f](const SessionAssignment& a) {
            auto table = anova_table(*scores, n, s, a);
            return want_f ? table.f : table.icc;
        };
    }
    case StatisticKind::I2c2: {
        auto ms = ms_;
        i2c2_value(*ms, identity_assignment(n, s));
        return [ms](const SessionAssignment& a) { return i2c2_value(*ms, a); };
    }
    }
    throw Error(ErrorKind::ConfigError, "unsupported statistic");
}

double PanelEngine::observed(const StatisticSpec& spec) {
    return statistic(spec)(identity_assignment(ms_->subjects(), ms_->sessions()));
}

} // namespace repeatr
