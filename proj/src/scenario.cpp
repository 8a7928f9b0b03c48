#include "iud/scenario.hpp"

#include <random>

namespace iud {

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
    Matrix m(static_cast<Index>(values.size()), static_cast<Index>(values.begin()->size()));
    Index j = 0;
    for (const auto& row : values) {
        Index h = 0;
        for (double v : row) m(j, h++) = v;
        ++j;
    }
    return m;
}

Scenario deterministic(std::string name, Matrix theta) {
    Scenario s;
    s.name = std::move(name);
    s.kind = Scenario::Kind::Deterministic;
    s.theta = std::move(theta);
    return s;
}

Scenario random_beta(std::string name, std::vector<BetaParams> params) {
    Scenario s;
    s.name = std::move(name);
    s.kind = Scenario::Kind::RandomBeta;
    s.beta = std::move(params);
    return s;
}

double draw_beta(const BetaParams& p, Xoshiro256& rng) {
    std::gamma_distribution<double> ga(p.alpha, 1.0);
    std::gamma_distribution<double> gb(p.beta, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
}

} // namespace

Index Scenario::treatments() const {
    return kind == Kind::Deterministic ? theta.rows() : static_cast<Index>(beta.size());
}

Matrix Scenario::realize(Index strata, Xoshiro256& rng) const {
    if (kind == Kind::Deterministic) {
        if (theta.cols() != strata) {
            throw ConfigurationError("scenario " + name + ": theta has " +
                                     std::to_string(theta.cols()) + " strata, trial has " +
                                     std::to_string(strata));
        }
        return theta;
    }
    Matrix out(static_cast<Index>(beta.size()), strata);
    for (Index j = 0; j < out.rows(); ++j) {
        for (Index h = 0; h < strata; ++h) out(j, h) = draw_beta(beta[j], rng);
    }
    return out;
}

void validate(const Scenario& scenario) {
    if (scenario.kind == Scenario::Kind::Deterministic) {
        if (scenario.theta.size() == 0) {
            throw ConfigurationError("scenario " + scenario.name + ": empty theta");
        }
        if (!((scenario.theta.array() >= 0.0) && (scenario.theta.array() <= 1.0)).all()) {
            throw ConfigurationError("scenario " + scenario.name +
                                     ": theta entries must lie in [0, 1]");
        }
    } else {
        if (scenario.beta.empty()) {
            throw ConfigurationError("scenario " + scenario.name + ": no Beta parameters");
        }
        for (const auto& b : scenario.beta) {
            if (!(b.alpha > 0.0 && b.beta > 0.0)) {
                throw ConfigurationError("scenario " + scenario.name +
                                         ": Beta parameters must be positive");
            }
        }
    }
}

const std::vector<Scenario>& builtin_scenarios() {
    static const std::vector<Scenario> catalog = {
        deterministic("S_Bbar", rows({{0.9, 0.4, 0.6, 0.8, 0.2}, {0.45, 0.85, 0.75, 0.6, 0.95}})),
        deterministic("S_B", rows({{0.5, 0.5, 0.5, 0.5, 0.5}, {0.1, 0.1, 0.1, 0.1, 0.1}})),
        deterministic("S_1", rows({{0.5, 0.5, 0.5, 0.3, 0.3}, {0.3, 0.3, 0.3, 0.1, 0.1}})),
        deterministic("S_2", rows({{0.3, 0.3, 0.3, 0.3, 0.3}, {0.1, 0.1, 0.1, 0.5, 0.5}})),
        deterministic("S_3", rows({{0.56, 0.5, 0.55, 0.44, 0.45}, {0.45, 0.55, 0.50, 0.42, 0.58}})),
        random_beta("S_4", {{49.5, 49.5}, {3.5, 31.5}}),
        random_beta("S_5", {{49.5, 49.5}, {49.5, 49.5}}),
    };
    return catalog;
}

std::optional<Scenario> find_scenario(const std::string& name) {
    for (const auto& s : builtin_scenarios()) {
        if (s.name == name) return s;
    }
    return std::nullopt;
}

} // namespace iud
