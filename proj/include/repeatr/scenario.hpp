#ifndef REPEATR_SCENARIO_HPP
#define REPEATR_SCENARIO_HPP

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace repeatr {

enum class ModelKind { GaussianAnova, LognormalAnova, GaussianManova, LognormalManova };
enum class BatchKind { None, MeanShift, Scaling };

std::string_view to_string(ModelKind kind);
std::string_view to_string(BatchKind kind);
ModelKind parse_model_kind(std::string_view text);
BatchKind parse_batch_kind(std::string_view text);

bool is_multivariate(ModelKind kind);
bool is_lognormal(ModelKind kind);

/// Parameters of one simulated random-effects population. The grand mean is
/// fixed at zero: every statistic here is invariant to a common shift.
struct ScenarioConfig {
    ModelKind model = ModelKind::GaussianAnova;
    double sigma2 = 1.0;    ///< noise variance
    double sigma_mu2 = 0.0; ///< subject-effect variance
    double rho = 0.0;       ///< within-vector correlation (MANOVA models)
    std::size_t dimension = 1;
    std::size_t subjects = 20;
    std::size_t sessions = 2;
    BatchKind batch = BatchKind::None;
    std::uint64_t seed = 0;

    /// Throws `Error(ConfigError)` naming the offending field.
    void validate() const;
};

} // namespace repeatr

#endif
