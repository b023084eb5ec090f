#include "repeatr/scenario.hpp"

#include <cmath>
#include <string>

#include "repeatr/error.hpp"

namespace repeatr {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::GaussianAnova: return "gaussian-anova";
    case ModelKind::LognormalAnova: return "lognormal-anova";
    case ModelKind::GaussianManova: return "gaussian-manova";
    case ModelKind::LognormalManova: return "lognormal-manova";
    }
    return "unknown";
}

std::string_view to_string(BatchKind kind) {
    switch (kind) {
    case BatchKind::None: return "none";
    case BatchKind::MeanShift: return "mean-shift";
    case BatchKind::Scaling: return "scaling";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
    for (auto kind : {ModelKind::GaussianAnova, ModelKind::LognormalAnova, ModelKind::GaussianManova,
                      ModelKind::LognormalManova}) {
        if (to_string(kind) == text) return kind;
    }
    throw Error(ErrorKind::ConfigError, "model: unknown kind '" + std::string(text) + "'");
}

BatchKind parse_batch_kind(std::string_view text) {
    for (auto kind : {BatchKind::None, BatchKind::MeanShift, BatchKind::Scaling}) {
        if (to_string(kind) == text) return kind;
    }
    throw Error(ErrorKind::ConfigError, "batch: unknown kind '" + std::string(text) + "'");
}

bool is_multivariate(ModelKind kind) {
    return kind == ModelKind::GaussianManova || kind == ModelKind::LognormalManova;
}

bool is_lognormal(ModelKind kind) {
    return kind == ModelKind::LognormalAnova || kind == ModelKind::LognormalManova;
}

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); };
    if (!(std::isfinite(sigma2) && sigma2 > 0)) fail("sigma2: must be > 0");
    if (!(std::isfinite(sigma_mu2) && sigma_mu2 >= 0)) fail("sigma_mu2: must be >= 0");
    if (!(std::isfinite(rho) && rho >= 0 && rho < 1)) fail("rho: must lie in [0, 1)");
    if (dimension < 1) fail("l: must be positive");
    if (subjects < 2) fail("n: need at least 2 subjects");
    if (sessions < 2) fail("s: need at least 2 sessions");
    if (is_multivariate(model) && dimension < 2) fail("l: multivariate models need l >= 2");
    if (!is_multivariate(model) && dimension != 1) fail("l: univariate models need l = 1");
    if (batch != BatchKind::None && model != ModelKind::GaussianAnova) {
        fail("batch: batch effects are defined for the gaussian-anova model only");
    }
}

} // namespace repeatr
