#pragma once

#include <optional>
#include <string>
#include <vector>

#include "iud/rng.hpp"
#include "iud/types.hpp"

namespace iud {

struct BetaParams {
    double alpha;
    double beta;
};

// Truth model: a fixed J x H matrix of success probabilities, or per-treatment
// Beta generators realized once per trial (iid across strata).
struct Scenario {
    enum class Kind { Deterministic, RandomBeta };

    std::string name;
    Kind kind = Kind::Deterministic;
    Matrix theta;                  // Deterministic
    std::vector<BetaParams> beta;  // RandomBeta, one per treatment
    Vector covariate_probs;        // empty: use the trial's p

    Index treatments() const;
    Matrix realize(Index strata, Xoshiro256& rng) const;
};

// Throws ConfigurationError on out-of-range parameters.
void validate(const Scenario& scenario);

// S_Bbar, S_B, S_1, S_2, S_3 (deterministic) and S_4, S_5 (Beta), H = 5, J = 2.
const std::vector<Scenario>& builtin_scenarios();

std::optional<Scenario> find_scenario(const std::string& name);

} // namespace iud
