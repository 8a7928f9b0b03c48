#include "iud/trial_config.hpp"

#include <algorithm>
#include <cmath>

namespace iud {

void validate(const TrialConfig& config) {
    if (config.treatments < 2) throw ConfigurationError("trial.J: need at least 2 treatments");
    if (config.strata < 1) throw ConfigurationError("trial.H: need at least 1 stratum");
    if (config.horizon < 1) throw ConfigurationError("trial.n: horizon must be positive");
    if (!(config.varsigma > 0.0)) throw ConfigurationError("trial.varsigma: must be positive");
    if (config.covariate_probs.size() != config.strata) {
        throw ConfigurationError("trial.p: length must equal H");
    }
    if ((config.covariate_probs.array() <= 0.0).any() ||
        std::abs(config.covariate_probs.sum() - 1.0) > 1e-12) {
        throw ConfigurationError("trial.p: entries must be positive and sum to 1");
    }
    for (Count c : config.checkpoints) {
        if (c < 1 || c > config.horizon) {
            throw ConfigurationError("trial.checkpoints: entries must lie in [1, n]");
        }
    }
    if (!std::is_sorted(config.checkpoints.begin(), config.checkpoints.end())) {
        throw ConfigurationError("trial.checkpoints: must be ascending");
    }
    try {
        validate(config.mechanism);
    } catch (const std::invalid_argument& e) {
        throw ConfigurationError(e.what());
    }
}

std::vector<Count> resolved_checkpoints(const TrialConfig& config) {
    std::vector<Count> out;
    for (Count c : config.checkpoints) {
        if (c >= 1 && c <= config.horizon) out.push_back(c);
    }
    out.push_back(config.horizon);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<Count> information_steps(Count horizon, const std::vector<double>& times) {
    std::vector<Count> steps;
    for (double t : times) {
        if (!(t > 0.0 && t <= 1.0)) {
            throw ConfigurationError("information times must lie in (0, 1]");
        }
        steps.push_back(static_cast<Count>(std::floor(static_cast<double>(horizon) * t + 1e-9)));
    }
    return steps;
}

} // namespace iud
