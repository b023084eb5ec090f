#include "repeatr/estimators.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "repeatr/engine.hpp"

namespace repeatr {

std::string_view to_string(EstimateKind kind) {
    switch (kind) {
    case EstimateKind::Dhat: return "dhat";
    case EstimateKind::Dtilde: return "dtilde";
    case EstimateKind::Drs: return "drs";
    case EstimateKind::Fingerprint: return "fingerprint";
    case EstimateKind::Icc: return "icc";
    case EstimateKind::I2c2: return "i2c2";
    case EstimateKind::PcaIcc: return "pca-icc";
    }
    return "unknown";
}

std::string_view to_string(Pairing pairing) {
    switch (pairing) {
    case Pairing::FirstLast: return "first-last";
    case Pairing::AllBatches: return "all-batches";
    case Pairing::FirstRest: return "first-rest";
    }
    return "unknown";
}

std::vector<MultiBatchStrategy> MultiBatchStrategy::all() {
    std::vector<MultiBatchStrategy> out;
    for (auto base : {RankBase::Dtilde, RankBase::Drs}) {
        for (auto pairing : {Pairing::FirstLast, Pairing::AllBatches, Pairing::FirstRest}) {
            out.push_back({pairing, base});
        }
    }
    return out;
}

std::string MultiBatchStrategy::name() const {
    return std::string(base == RankBase::Dtilde ? "dtilde" : "drs") + ":" +
           std::string(to_string(pairing));
}

MultiBatchStrategy MultiBatchStrategy::parse(std::string_view text) {
    for (const auto& strategy : all()) {
        if (strategy.name() == text) return strategy;
    }
    throw Error(ErrorKind::ConfigError, "unknown multi-batch strategy '" + std::string(text) + "'");
}

namespace {

std::shared_ptr<const CombinedDistanceMatrix> share(const CombinedDistanceMatrix& dm) {
    return std::make_shared<const CombinedDistanceMatrix>(dm);
}

void require_panel_shape(const CombinedDistanceMatrix& dm) {
    if (dm.subjects() < 2 || dm.sessions() < 2) {
        throw Error(ErrorKind::ShapeError, "discriminability needs n >= 2 subjects and s >= 2 sessions");
    }
}

RepeatabilityEstimate make_estimate(EstimateKind kind, double value, const CombinedDistanceMatrix& dm) {
    return {kind, value, dm.subjects(), dm.sessions(), 0, {}};
}

std::vector<std::size_t> all_sessions(std::size_t s) {
    std::vector<std::size_t> out(s);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
}

} // namespace

RepeatabilityEstimate sample_discriminability(const CombinedDistanceMatrix& dm) {
    require_panel_shape(dm);
    RankedRows rows(share(dm), all_sessions(dm.sessions()));
    return make_estimate(EstimateKind::Dhat,
                         rows.dhat(identity_assignment(dm.subjects(), dm.sessions())), dm);
}

RepeatabilityEstimate rank_discriminability(const CombinedDistanceMatrix& dm) {
    require_panel_shape(dm);
    RankedRows rows(share(dm), all_sessions(dm.sessions()));
    return make_estimate(EstimateKind::Dtilde,
                         rows.dtilde(identity_assignment(dm.subjects(), dm.sessions())), dm);
}

RepeatabilityEstimate ranksum_discriminability(const CombinedDistanceMatrix& dm, std::size_t t1,
                                               std::size_t t2) {
    require_panel_shape(dm);
    CrossBlockRanks block(share(dm), t1, t2);
    auto ident = identity_assignment(dm.subjects(), dm.sessions());
    auto out = make_estimate(EstimateKind::Drs, block.drs(ident), dm);
    out.detail["R_n"] = static_cast<double>(block.rank_sum(ident));
    return out;
}

RepeatabilityEstimate fingerprint_index(const CombinedDistanceMatrix& dm, std::size_t t1,
                                        std::size_t t2) {
    require_panel_shape(dm);
    CrossBlockRanks block(share(dm), t1, t2);
    auto ident = identity_assignment(dm.subjects(), dm.sessions());
    auto out = make_estimate(EstimateKind::Fingerprint, block.fingerprint(ident), dm);
    out.detail["T_n"] = static_cast<double>(block.matches(ident));
    return out;
}

RepeatabilityEstimate icc_anova(const MeasurementSet& ms) {
    if (ms.features() != 1) {
        throw Error(ErrorKind::DimensionError,
                    "ICC needs univariate data (l = 1), got l = " + std::to_string(ms.features()));
    }
    if (ms.subjects() < 2 || ms.sessions() < 2) {
        throw Error(ErrorKind::ShapeError, "ICC needs n >= 2 subjects and s >= 2 sessions");
    }
    auto table = anova_table(ms.values(), ms.subjects(), ms.sessions(),
                             identity_assignment(ms.subjects(), ms.sessions()));
    RepeatabilityEstimate out{EstimateKind::Icc, table.icc, ms.subjects(), ms.sessions(), 1, {}};
    out.detail["F"] = table.f;
    out.detail["MS_B"] = table.ms_between;
    out.detail["MS_W"] = table.ms_within;
    return out;
}

RepeatabilityEstimate i2c2_moments(const MeasurementSet& ms) {
    if (ms.subjects() < 2 || ms.sessions() < 2) {
        throw Error(ErrorKind::ShapeError, "I2C2 needs n >= 2 subjects and s >= 2 sessions");
    }
    const double value = i2c2_value(ms, identity_assignment(ms.subjects(), ms.sessions()));
    return {EstimateKind::I2c2, value, ms.subjects(), ms.sessions(), ms.features(), {}};
}

MeasurementSet pca_first_component(const MeasurementSet& ms) {
    const auto l = ms.features();
    if (l < 2) {
        throw Error(ErrorKind::DimensionError, "PCA needs multivariate data (l >= 2)");
    }
    const auto count = static_cast<Eigen::Index>(ms.measurements());
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> raw(
        ms.values().data(), count, static_cast<Eigen::Index>(l));
    const Eigen::MatrixXd centered = raw.rowwise() - raw.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(count - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::EigenFailure, "covariance eigen-decomposition failed");
    }
    const double top = solver.eigenvalues()(static_cast<Eigen::Index>(l) - 1);
    const double scale = raw.squaredNorm() / static_cast<double>(raw.size());
    if (!(top > 1e-14 * scale)) {
        throw Error(ErrorKind::RankDeficient, "covariance of the pooled measurements is numerically zero");
    }
    Eigen::VectorXd axis = solver.eigenvectors().col(static_cast<Eigen::Index>(l) - 1);
    Eigen::Index largest = 0;
    axis.cwiseAbs().maxCoeff(&largest);
    if (axis(largest) < 0) axis = -axis;

    const Eigen::VectorXd scores = centered * axis;
    return MeasurementSet(ms.subject_ids(), ms.session_ids(), 1,
                          std::vector<double>(scores.data(), scores.data() + scores.size()));
}

RepeatabilityEstimate pca_icc(const MeasurementSet& ms) {
    auto out = icc_anova(pca_first_component(ms));
    out.kind = EstimateKind::PcaIcc;
    out.features = ms.features();
    return out;
}

RepeatabilityEstimate multibatch_estimate(const CombinedDistanceMatrix& dm, MultiBatchStrategy strategy) {
    require_panel_shape(dm);
    const auto s = dm.sessions();
    auto shared = share(dm);
    auto ident = identity_assignment(dm.subjects(), s);

    double value = 0;
    if (strategy.base == RankBase::Dtilde) {
        std::vector<std::vector<std::size_t>> subsets;
        switch (strategy.pairing) {
        case Pairing::FirstLast: subsets.push_back({0, s - 1}); break;
        case Pairing::AllBatches: subsets.push_back(all_sessions(s)); break;
        case Pairing::FirstRest:
            for (std::size_t t = 1; t < s; ++t) subsets.push_back({0, t});
            break;
        }
        for (auto& subset : subsets) value += RankedRows(shared, std::move(subset)).dtilde(ident);
        value /= static_cast<double>(subsets.size());
    } else {
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        switch (strategy.pairing) {
        case Pairing::FirstLast: pairs.emplace_back(0, s - 1); break;
        case Pairing::AllBatches:
            for (std::size_t t = 0; t < s; ++t) {
                for (std::size_t u = t + 1; u < s; ++u) pairs.emplace_back(t, u);
            }
            break;
        case Pairing::FirstRest:
            for (std::size_t t = 1; t < s; ++t) pairs.emplace_back(0, t);
            break;
        }
        for (auto [t1, t2] : pairs) value += CrossBlockRanks(shared, t1, t2).drs(ident);
        value /= static_cast<double>(pairs.size());
    }
    auto out = make_estimate(strategy.base == RankBase::Dtilde ? EstimateKind::Dtilde : EstimateKind::Drs,
                             value, dm);
    return out;
}

RepeatabilityEstimate multibatch_estimate(const MeasurementSet& ms, MultiBatchStrategy strategy,
                                          Metric metric) {
    auto out = multibatch_estimate(pairwise_distances(ms, metric), strategy);
    out.features = ms.features();
    return out;
}

} // namespace repeatr
