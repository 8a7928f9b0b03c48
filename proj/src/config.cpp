#include "iud/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace iud {

using nlohmann::json;

namespace {

// A JSON object being read at a known key path; remembers which keys were
// consumed so that leftovers can be rejected.
class Node {
public:
    Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {
        if (!value_.is_object()) fail("expected an object");
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigurationError((path_.empty() ? std::string("config") : path_) + ": " + what);
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* get(const std::string& key) {
        seen_.insert(key);
        auto it = value_.find(key);
        return it == value_.end() || it->is_null() ? nullptr : &*it;
    }

    double number(const std::string& key, double fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_number()) bad(key, "expected a number");
        return v->get<double>();
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_number_integer() && !v->is_number_unsigned()) bad(key, "expected an integer");
        return v->get<std::int64_t>();
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (v->is_number_unsigned()) return v->get<std::uint64_t>();
        if (v->is_number_integer() && v->get<std::int64_t>() >= 0) return v->get<std::uint64_t>();
        bad(key, "expected a non-negative integer");
    }

    [[noreturn]] void bad(const std::string& key, const std::string& what) const {
        throw ConfigurationError(child(key) + ": " + what);
    }

    void finish() const {
        for (auto it = value_.begin(); it != value_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigurationError("unknown key " + child(it.key()));
        }
    }

private:
    const json& value_;
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<double> number_list(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigurationError(path + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigurationError(path + ": expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

Vector to_vector(const std::vector<double>& xs) {
    return Eigen::Map<const Vector>(xs.data(), static_cast<Index>(xs.size()));
}

PsiKind parse_psi(const std::string& s, const std::string& path) {
    if (s == "min") return PsiKind::Min;
    if (s == "exp") return PsiKind::Exp;
    if (s == "rational") return PsiKind::Rational;
    throw ConfigurationError(path + ": expected one of min, exp, rational");
}

const char* psi_name(PsiKind kind) {
    switch (kind) {
    case PsiKind::Min: return "min";
    case PsiKind::Exp: return "exp";
    case PsiKind::Rational: return "rational";
    }
    return "rational";
}

CSequence parse_c_rule(const json& v, const std::string& path) {
    CSequence c;
    if (v.is_string()) {
        if (v.get<std::string>() != "inv_log") throw ConfigurationError(path + ": expected \"inv_log\"");
        return c;
    }
    Node node(v, path);
    const json* kind = node.get("kind");
    if (!kind || !kind->is_string()) node.bad("kind", "expected \"inv_log\" or \"power\"");
    if (*kind == "inv_log") {
        c.rule = CSequence::Rule::InverseLog;
    } else if (*kind == "power") {
        c.rule = CSequence::Rule::Power;
        c.scale = node.number("scale", 1.0);
        c.exponent = node.number("exponent", 0.5);
        if (!(c.scale > 0.0)) node.bad("scale", "must be positive");
        if (!(c.exponent > 0.0)) node.bad("exponent", "must be positive");
    } else {
        node.bad("kind", "expected \"inv_log\" or \"power\"");
    }
    node.finish();
    return c;
}

json c_rule_json(const CSequence& c) {
    if (c.rule == CSequence::Rule::InverseLog) return "inv_log";
    return {{"kind", "power"}, {"scale", c.scale}, {"exponent", c.exponent}};
}

AllocationRule parse_allocation(const json* v, const std::string& path) {
    AllocationRule rule;
    if (!v) return rule;
    Node node(*v, path);
    rule.cap = node.number("cap", rule.cap);
    if (!(rule.cap > 1.0)) node.bad("cap", "must exceed 1");
    if (const json* f = node.get("f")) {
        const std::string fpath = node.child("f");
        if (f->is_string()) {
            const std::string name = f->get<std::string>();
            if (name == "inverse_complement") {
                rule.kind = AllocationRule::Kind::InverseComplement;
            } else if (name == "constant") {
                rule.kind = AllocationRule::Kind::Constant;
            } else if (name == "power") {
                rule.kind = AllocationRule::Kind::Power;
            } else {
                throw ConfigurationError(fpath + ": expected inverse_complement, constant or power");
            }
        } else {
            Node fn(*f, fpath);
            const json* kind = fn.get("kind");
            if (!kind || *kind != "power") fn.bad("kind", "expected \"power\"");
            rule.kind = AllocationRule::Kind::Power;
            rule.gamma = fn.number("gamma", rule.gamma);
            rule.epsilon = fn.number("epsilon", rule.epsilon);
            if (!(rule.gamma > 0.0)) fn.bad("gamma", "must be positive");
            if (!(rule.epsilon > 0.0)) fn.bad("epsilon", "must be positive");
            fn.finish();
        }
    }
    node.finish();
    return rule;
}

json allocation_json(const AllocationRule& rule) {
    json f;
    switch (rule.kind) {
    case AllocationRule::Kind::InverseComplement: f = "inverse_complement"; break;
    case AllocationRule::Kind::Constant: f = "constant"; break;
    case AllocationRule::Kind::Power:
        f = {{"kind", "power"}, {"gamma", rule.gamma}, {"epsilon", rule.epsilon}};
        break;
    }
    return {{"f", f}, {"cap", rule.cap}};
}

Scenario parse_scenario(const json& v, const std::string& path, Index treatments, Index strata) {
    Scenario scenario;
    if (v.is_string()) {
        auto found = find_scenario(v.get<std::string>());
        if (!found) throw ConfigurationError(path + ": unknown scenario " + v.get<std::string>());
        scenario = *found;
    } else {
        Node node(v, path);
        const json* name = node.get("name");
        if (!name || !name->is_string()) node.bad("name", "expected a string");
        scenario.name = name->get<std::string>();
        const json* theta = node.get("theta");
        const json* beta = node.get("beta");
        if (theta && beta) node.fail("give theta or beta, not both");
        if (theta) {
            const std::string tpath = node.child("theta");
            if (!theta->is_array() || theta->empty()) throw ConfigurationError(tpath + ": expected J rows");
            scenario.kind = Scenario::Kind::Deterministic;
            scenario.theta.resize(static_cast<Index>(theta->size()), strata);
            for (std::size_t r = 0; r < theta->size(); ++r) {
                const std::string rpath = tpath + "[" + std::to_string(r) + "]";
                const std::vector<double> row = number_list((*theta)[r], rpath);
                if (static_cast<Index>(row.size()) != strata) {
                    throw ConfigurationError(rpath + ": expected H = " + std::to_string(strata) + " rates");
                }
                for (Index h = 0; h < strata; ++h) {
                    if (!(row[h] >= 0.0 && row[h] <= 1.0)) {
                        throw ConfigurationError(rpath + ": rates must lie in [0, 1]");
                    }
                    scenario.theta(static_cast<Index>(r), h) = row[h];
                }
            }
        } else if (beta) {
            const std::string bpath = node.child("beta");
            if (!beta->is_array() || beta->empty()) throw ConfigurationError(bpath + ": expected J pairs");
            scenario.kind = Scenario::Kind::RandomBeta;
            for (std::size_t r = 0; r < beta->size(); ++r) {
                const std::string rpath = bpath + "[" + std::to_string(r) + "]";
                const std::vector<double> pair = number_list((*beta)[r], rpath);
                if (pair.size() != 2 || !(pair[0] > 0.0) || !(pair[1] > 0.0)) {
                    throw ConfigurationError(rpath + ": expected a positive pair [alpha, beta]");
                }
                scenario.beta.push_back({pair[0], pair[1]});
            }
        } else {
            auto found = find_scenario(scenario.name);
            if (!found) node.fail("unknown scenario " + scenario.name + " and no theta or beta given");
            scenario = *found;
        }
        if (const json* p = node.get("p")) {
            scenario.covariate_probs = to_vector(number_list(*p, node.child("p")));
            if (scenario.covariate_probs.size() != strata ||
                (scenario.covariate_probs.array() <= 0.0).any() ||
                std::abs(scenario.covariate_probs.sum() - 1.0) > 1e-12) {
                throw ConfigurationError(node.child("p") + ": need H positive entries summing to 1");
            }
        }
        node.finish();
    }
    if (scenario.treatments() != treatments) {
        throw ConfigurationError(path + ": scenario " + scenario.name + " has " +
                                 std::to_string(scenario.treatments()) + " treatments, trial.J is " +
                                 std::to_string(treatments));
    }
    if (scenario.kind == Scenario::Kind::Deterministic && scenario.theta.cols() != strata) {
        throw ConfigurationError(path + ": scenario " + scenario.name + " has " +
                                 std::to_string(scenario.theta.cols()) + " strata, trial.H is " +
                                 std::to_string(strata));
    }
    if (scenario.covariate_probs.size() != 0 && scenario.covariate_probs.size() != strata) {
        throw ConfigurationError(path + ": scenario " + scenario.name + " covariate probabilities need H entries");
    }
    return scenario;
}

} // namespace

MechanismSpec mechanism_from_label(const std::string& label) {
    MechanismSpec spec{label, {}, {}};
    if (label == "IUD1" || label == "vanishing_borrowing") {
        spec.params.variant = Variant::VanishingBorrowing;
    } else if (label == "IUD2" || label == "treatment_similarity") {
        spec.params.variant = Variant::TreatmentSimilarity;
    } else if (label == "IUD3" || label == "model_based") {
        spec.params.variant = Variant::ModelBased;
    } else if (label == "IUD3C" || label == "model_based_clustered") {
        spec.params.variant = Variant::ModelBasedClustered;
    } else if (label == "NoBorrowing" || label == "no_borrowing") {
        spec.params.variant = Variant::NoBorrowing;
    } else if (label == "CR") {
        spec.params.variant = Variant::NoBorrowing;
        spec.allocation = AllocationRule::constant();
    } else {
        throw ConfigurationError("mechanism.variant: unknown mechanism " + label);
    }
    return spec;
}

TrialConfig SimulationPlan::trial_for(const MechanismSpec& spec) const {
    TrialConfig config = trial;
    config.mechanism = spec.params;
    config.allocation = spec.allocation;
    return config;
}

SimulationPlan parse_config(const json& document) {
    Node root(document, "");
    SimulationPlan plan;
    TrialConfig& trial = plan.trial;

    if (const json* t = root.get("trial")) {
        Node node(*t, "trial");
        trial.treatments = node.integer("J", trial.treatments);
        trial.strata = node.integer("H", trial.strata);
        trial.horizon = node.integer("n", trial.horizon);
        if (trial.treatments < 2) node.bad("J", "need at least 2 treatments");
        if (trial.strata < 1) node.bad("H", "need at least 1 stratum");
        if (trial.horizon < 1) node.bad("n", "must be positive");
        trial.varsigma = node.number("varsigma", trial.varsigma);
        trial.seed = node.unsigned_integer("seed", trial.seed);
        if (const json* p = node.get("p")) {
            trial.covariate_probs = to_vector(number_list(*p, "trial.p"));
        } else {
            trial.covariate_probs = Vector::Constant(trial.strata, 1.0 / static_cast<double>(trial.strata));
        }
        if (const json* c = node.get("checkpoints")) {
            trial.checkpoints.clear();
            for (double x : number_list(*c, "trial.checkpoints")) {
                if (x != std::floor(x)) node.bad("checkpoints", "expected integers");
                trial.checkpoints.push_back(static_cast<Count>(x));
            }
        } else {
            trial.checkpoints.erase(std::remove_if(trial.checkpoints.begin(), trial.checkpoints.end(),
                                                   [&](Count c) { return c > trial.horizon; }),
                                    trial.checkpoints.end());
        }
        if (const json* ti = node.get("info_times")) {
            plan.info_times = number_list(*ti, "trial.info_times");
            for (std::size_t k = 0; k < plan.info_times.size(); ++k) {
                const double x = plan.info_times[k];
                if (!(x > 0.0 && x <= 1.0)) node.bad("info_times", "entries must lie in (0, 1]");
                if (k > 0 && !(x > plan.info_times[k - 1])) node.bad("info_times", "must be ascending");
            }
        }
        node.finish();
    }
    {
        const std::vector<Count> extra = information_steps(trial.horizon, plan.info_times);
        for (Count s : extra) {
            if (s < 1) throw ConfigurationError("trial.info_times: floor(n t) must be at least 1");
        }
        trial.checkpoints.insert(trial.checkpoints.end(), extra.begin(), extra.end());
        std::sort(trial.checkpoints.begin(), trial.checkpoints.end());
        trial.checkpoints.erase(std::unique(trial.checkpoints.begin(), trial.checkpoints.end()),
                                trial.checkpoints.end());
    }

    MechanismParams shared;
    std::vector<std::string> labels = {"CR", "IUD1", "IUD2", "IUD3"};
    if (const json* m = root.get("mechanism")) {
        Node node(*m, "mechanism");
        if (const json* v = node.get("variant")) {
            labels.clear();
            if (v->is_string()) {
                labels.push_back(v->get<std::string>());
            } else if (v->is_array() && !v->empty()) {
                for (const auto& x : *v) {
                    if (!x.is_string()) node.bad("variant", "expected mechanism labels");
                    labels.push_back(x.get<std::string>());
                }
            } else {
                node.bad("variant", "expected a label or an array of labels");
            }
        }
        if (const json* k = node.get("psi_kind")) {
            if (!k->is_string()) node.bad("psi_kind", "expected a string");
            shared.psi_kind = parse_psi(k->get<std::string>(), "mechanism.psi_kind");
        }
        shared.psi_max = node.number("psi_max", shared.psi_max);
        if (const json* c = node.get("c_rule")) shared.c_sequence = parse_c_rule(*c, "mechanism.c_rule");
        if (const json* mle = node.get("mle")) {
            Node mn(*mle, "mechanism.mle");
            shared.mle.m_max = mn.number("m_max", shared.mle.m_max);
            shared.mle.m_min = mn.number("m_min", shared.mle.m_min);
            shared.mle.tol = mn.number("tol", shared.mle.tol);
            shared.mle.max_iters = static_cast<int>(mn.integer("max_iters", shared.mle.max_iters));
            shared.mle.grid_points = static_cast<int>(mn.integer("grid_points", shared.mle.grid_points));
            mn.finish();
        }
        shared.refit_every = static_cast<int>(node.integer("refit_every", shared.refit_every));
        node.finish();
    }
    const AllocationRule allocation = parse_allocation(root.get("allocation"), "allocation");
    shared.mle.default_prior = trial.varsigma;

    std::set<std::string> unique_labels;
    for (const std::string& label : labels) {
        if (!unique_labels.insert(label).second) {
            throw ConfigurationError("mechanism.variant: duplicate label " + label);
        }
        MechanismSpec spec = mechanism_from_label(label);
        const Variant variant = spec.params.variant;
        spec.params = shared;
        spec.params.variant = variant;
        if (label != "CR") spec.allocation = allocation;
        plan.mechanisms.push_back(spec);
    }
    trial.mechanism = plan.mechanisms.front().params;
    trial.allocation = plan.mechanisms.front().allocation;

    if (const json* s = root.get("scenarios")) {
        if (!s->is_array() || s->empty()) root.bad("scenarios", "expected a non-empty array");
        std::set<std::string> names;
        for (std::size_t k = 0; k < s->size(); ++k) {
            Scenario scenario = parse_scenario((*s)[k], "scenarios[" + std::to_string(k) + "]",
                                               trial.treatments, trial.strata);
            if (!names.insert(scenario.name).second) {
                throw ConfigurationError("scenarios: duplicate name " + scenario.name);
            }
            plan.scenarios.push_back(std::move(scenario));
        }
    } else {
        for (const Scenario& scenario : builtin_scenarios()) {
            plan.scenarios.push_back(parse_scenario(json(scenario.name), "scenarios", trial.treatments,
                                                    trial.strata));
        }
    }

    plan.replicates = root.unsigned_integer("replicates", plan.replicates);
    if (plan.replicates < 1) root.bad("replicates", "need at least 1");
    root.finish();

    validate(trial);
    for (const MechanismSpec& spec : plan.mechanisms) validate(plan.trial_for(spec));
    for (const Scenario& scenario : plan.scenarios) validate(scenario);
    return plan;
}

json scenario_to_json(const Scenario& scenario) {
    json out = {{"name", scenario.name}};
    if (scenario.kind == Scenario::Kind::Deterministic) {
        json rows = json::array();
        for (Index j = 0; j < scenario.theta.rows(); ++j) {
            json row = json::array();
            for (Index h = 0; h < scenario.theta.cols(); ++h) row.push_back(scenario.theta(j, h));
            rows.push_back(row);
        }
        out["theta"] = rows;
    } else {
        json pairs = json::array();
        for (const BetaParams& b : scenario.beta) pairs.push_back({b.alpha, b.beta});
        out["beta"] = pairs;
    }
    if (scenario.covariate_probs.size() > 0) {
        out["p"] = std::vector<double>(scenario.covariate_probs.data(),
                                       scenario.covariate_probs.data() + scenario.covariate_probs.size());
    }
    return out;
}

json plan_to_json(const SimulationPlan& plan) {
    const TrialConfig& t = plan.trial;
    json trial = {
        {"J", t.treatments},
        {"H", t.strata},
        {"n", t.horizon},
        {"p", std::vector<double>(t.covariate_probs.data(), t.covariate_probs.data() + t.covariate_probs.size())},
        {"varsigma", t.varsigma},
        {"seed", t.seed},
        {"checkpoints", t.checkpoints},
    };
    if (!plan.info_times.empty()) trial["info_times"] = plan.info_times;

    const MechanismParams& m = t.mechanism;
    json labels = json::array();
    for (const MechanismSpec& spec : plan.mechanisms) labels.push_back(spec.label);
    json mechanism = {
        {"variant", labels},
        {"psi_kind", psi_name(m.psi_kind)},
        {"psi_max", m.psi_max},
        {"c_rule", c_rule_json(m.c_sequence)},
        {"mle",
         {{"m_max", m.mle.m_max},
          {"m_min", m.mle.m_min},
          {"tol", m.mle.tol},
          {"max_iters", m.mle.max_iters},
          {"grid_points", m.mle.grid_points}}},
        {"refit_every", m.refit_every},
    };

    // CR always randomizes uniformly; the shared rule lives on the other labels.
    AllocationRule allocation;
    for (const MechanismSpec& spec : plan.mechanisms) {
        if (spec.label != "CR") {
            allocation = spec.allocation;
            break;
        }
    }
    json scenarios = json::array();
    for (const Scenario& s : plan.scenarios) scenarios.push_back(scenario_to_json(s));
    return {{"trial", trial},
            {"mechanism", mechanism},
            {"allocation", allocation_json(allocation)},
            {"scenarios", scenarios},
            {"replicates", plan.replicates}};
}

} // namespace iud
