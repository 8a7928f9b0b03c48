#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "iud/scenario.hpp"
#include "iud/trial_config.hpp"

namespace iud {

// One arm of a comparison: the urn mechanism together with its allocation rule.
struct MechanismSpec {
    std::string label; // e.g. "IUD2" or "CR"
    MechanismParams params;
    AllocationRule allocation;
};

struct SimulationPlan {
    TrialConfig trial; // mechanism and allocation hold the first spec
    std::vector<MechanismSpec> mechanisms;
    std::vector<Scenario> scenarios;
    std::uint64_t replicates = 10000;
    std::vector<double> info_times;

    // The trial config for one mechanism.
    TrialConfig trial_for(const MechanismSpec& spec) const;
};

// Mechanism from a label: IUD1, IUD2, IUD3, IUD3C, NoBorrowing, CR or a
// snake_case variant name. Throws ConfigurationError.
MechanismSpec mechanism_from_label(const std::string& label);

// Validates the document and applies defaults. Unknown keys, type errors and
// range violations throw ConfigurationError naming the key path.
SimulationPlan parse_config(const nlohmann::json& document);

// Fully resolved document; parse_config(plan_to_json(p)) reproduces p.
nlohmann::json plan_to_json(const SimulationPlan& plan);

nlohmann::json scenario_to_json(const Scenario& scenario);

} // namespace iud
