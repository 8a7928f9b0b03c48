#pragma once

#include <cmath>
#include <stdexcept>
#include <string_view>

#include "iud/rng.hpp"
#include "iud/types.hpp"

namespace iud {

// The allocation function f applied to urn proportions.
struct AllocationRule {
    enum class Kind {
        InverseComplement, // 1 / (1 - x), capped
        Power,             // x^gamma + epsilon
        Constant,          // complete randomization
    };

    Kind kind = Kind::InverseComplement;
    double gamma = 1.0;
    double epsilon = 1e-6;
    double cap = 1e6;

    static AllocationRule inverse_complement() { return {}; }
    static AllocationRule constant() { return {Kind::Constant}; }
    static AllocationRule power(double gamma, double epsilon = 1e-6) {
        return {Kind::Power, gamma, epsilon};
    }
};

std::string_view to_string(AllocationRule::Kind kind);

template <typename Scalar>
Scalar f_eval(const AllocationRule& rule, Scalar x) {
    if (!(x >= Scalar(0) && x <= Scalar(1))) {
        throw std::invalid_argument("f_eval: argument outside [0, 1]");
    }
    switch (rule.kind) {
    case AllocationRule::Kind::InverseComplement: {
        const Scalar complement = Scalar(1) - x;
        const Scalar cap = static_cast<Scalar>(rule.cap);
        return complement * cap <= Scalar(1) ? cap : Scalar(1) / complement;
    }
    case AllocationRule::Kind::Power:
        return std::pow(x, static_cast<Scalar>(rule.gamma)) + static_cast<Scalar>(rule.epsilon);
    case AllocationRule::Kind::Constant:
        return Scalar(1);
    }
    return Scalar(1);
}

// f(P_j) / sum_l f(P_l).
Vector allocation_probs(const Eigen::Ref<const Vector>& proportions, const AllocationRule& rule);

// Categorical draw; index of the first cumulative mass exceeding a uniform.
Index draw_categorical(const Eigen::Ref<const Vector>& probs, Xoshiro256& rng);

inline Index draw_covariate(const Eigen::Ref<const Vector>& covariate_probs, Xoshiro256& rng) {
    return draw_categorical(covariate_probs, rng);
}

inline Index draw_assignment(const Eigen::Ref<const Vector>& probs, Xoshiro256& rng) {
    return draw_categorical(probs, rng);
}

inline bool draw_outcome(double theta, Xoshiro256& rng) { return uniform01(rng) < theta; }

} // namespace iud
