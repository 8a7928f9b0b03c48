#pragma once

#include <cstdint>
#include <vector>

#include "iud/allocation.hpp"
#include "iud/types.hpp"
#include "iud/urn_mechanisms.hpp"

namespace iud {

struct TrialConfig {
    Index treatments = 2;
    Index strata = 5;
    Count horizon = 200;
    Vector covariate_probs = Vector::Constant(5, 0.2);
    double varsigma = 1.0;
    AllocationRule allocation;
    MechanismParams mechanism;
    std::uint64_t seed = 20240901;
    // Steps at which the trial is snapshotted; the horizon is always included.
    std::vector<Count> checkpoints = {50, 100, 200};
};

// Throws ConfigurationError naming the offending field.
void validate(const TrialConfig& config);

// Sorted, de-duplicated checkpoints clipped to the horizon, horizon last.
std::vector<Count> resolved_checkpoints(const TrialConfig& config);

// floor(n t) for information times t in (0, 1].
std::vector<Count> information_steps(Count horizon, const std::vector<double>& times);

} // namespace iud
