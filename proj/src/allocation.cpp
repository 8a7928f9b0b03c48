#include "iud/allocation.hpp"

namespace iud {

std::string_view to_string(AllocationRule::Kind kind) {
    switch (kind) {
    case AllocationRule::Kind::InverseComplement: return "inverse_complement";
    case AllocationRule::Kind::Power: return "power";
    case AllocationRule::Kind::Constant: return "constant";
    }
    return "unknown";
}

Vector allocation_probs(const Eigen::Ref<const Vector>& proportions, const AllocationRule& rule) {
    Vector weights(proportions.size());
    for (Index j = 0; j < proportions.size(); ++j) {
        weights[j] = f_eval(rule, proportions[j]);
    }
    return weights / weights.sum();
}

Index draw_categorical(const Eigen::Ref<const Vector>& probs, Xoshiro256& rng) {
    const double u = uniform01(rng);
    double cumulative = 0.0;
    Index last_positive = 0;
    for (Index k = 0; k < probs.size(); ++k) {
        if (probs[k] <= 0.0) continue;
        cumulative += probs[k];
        last_positive = k;
        if (u < cumulative) return k;
    }
    // Rounding left the cumulative sum just below 1.
    return last_positive;
}

} // namespace iud
