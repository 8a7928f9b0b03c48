#include "iud/sim_harness.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

#include "iud/allocation.hpp"
#include "iud/urn_mechanisms.hpp"

namespace iud {

std::optional<std::size_t> TrialTrace::find(Count step) const {
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (steps[i] == step) return i;
    }
    return std::nullopt;
}

TrialTrace run_trial(const TrialConfig& config, const Scenario& scenario, Xoshiro256& rng) {
    validate(config);
    validate(scenario);
    if (scenario.treatments() != config.treatments) {
        throw ConfigurationError("scenario " + scenario.name + " has " +
                                 std::to_string(scenario.treatments()) + " treatments, trial.J is " +
                                 std::to_string(config.treatments));
    }
    const Vector& p = scenario.covariate_probs.size() > 0 ? scenario.covariate_probs
                                                         : config.covariate_probs;
    if (p.size() != config.strata) {
        throw ConfigurationError("scenario " + scenario.name + ": covariate probabilities need H entries");
    }

    TrialTrace trace;
    trace.config = config;
    trace.scenario = scenario.name;
    trace.theta = scenario.realize(config.strata, rng);

    MechanismParams mechanism = config.mechanism;
    mechanism.mle.default_prior = config.varsigma;
    UrnEvaluator urns(mechanism);

    const std::vector<Count> checkpoints = resolved_checkpoints(config);
    std::size_t next_checkpoint = 0;
    const bool uniform = config.allocation.kind == AllocationRule::Kind::Constant;
    const Vector uniform_probs = Vector::Constant(config.treatments, 1.0 / config.treatments);

    TrialState state(config.treatments, config.strata, 0);
    Vector proportions(config.treatments);
    for (Count step = 0; step < config.horizon; ++step) {
        const Index h = draw_covariate(p, rng);
        Index j;
        if (uniform) {
            j = draw_assignment(uniform_probs, rng);
        } else {
            for (Index k = 0; k < config.treatments; ++k) {
                proportions[k] = urns.cell(state.counts, k, h, step).proportion;
            }
            j = draw_assignment(allocation_probs(proportions, config.allocation), rng);
        }
        const bool success = draw_outcome(trace.theta(j, h), rng);
        state.record(h, j, success);
        urns.invalidate(j);

        if (next_checkpoint < checkpoints.size() && state.step == checkpoints[next_checkpoint]) {
            trace.steps.push_back(state.step);
            trace.counts.push_back(state.counts);
            trace.urn.push_back(urns.all(state.counts, state.step).proportion);
            ++next_checkpoint;
        }
    }
    return trace;
}

std::string_view to_string(Estimator estimator) {
    return estimator == Estimator::UrnProportion ? "P" : "theta_hat";
}

InfMetric inf_metric(const TrialTrace& trace, std::size_t snapshot, Estimator estimator) {
    if (trace.theta.rows() != 2) {
        throw UnsupportedMetricError("INF is defined for two treatments only");
    }
    if (snapshot >= trace.counts.size()) throw std::out_of_range("inf_metric: no such snapshot");
    const Matrix estimate = estimator == Estimator::UrnProportion
                                ? trace.urn[snapshot]
                                : theta_hat_matrix(trace.counts[snapshot]);
    const Vector error = (estimate.row(0) - estimate.row(1)).transpose() -
                         (trace.theta.row(0) - trace.theta.row(1)).transpose();
    return {error.norm(), error.cwiseAbs()};
}

PwMetric pw_metric(const TrialTrace& trace, std::size_t snapshot) {
    if (trace.theta.rows() != 2) {
        throw UnsupportedMetricError("PW is defined for two treatments only");
    }
    if (snapshot >= trace.counts.size()) throw std::out_of_range("pw_metric: no such snapshot");
    const CountsTensor& counts = trace.counts[snapshot];
    const Index strata = counts.strata();
    PwMetric out{Vector::Constant(strata, std::numeric_limits<double>::quiet_NaN()),
                 std::vector<bool>(static_cast<std::size_t>(strata), false), std::nullopt};
    double weighted = 0.0;
    Count patients = 0;
    bool any_untied = false;
    for (Index h = 0; h < strata; ++h) {
        const double t1 = trace.theta(0, h);
        const double t2 = trace.theta(1, h);
        if (t1 == t2) continue;
        any_untied = true;
        const Count total = counts.assigned(0, h) + counts.assigned(1, h);
        if (total == 0) continue;
        const Index worst = t1 < t2 ? 0 : 1;
        out.per_stratum[h] = static_cast<double>(counts.assigned(worst, h)) /
                             static_cast<double>(total);
        out.defined[h] = true;
        weighted += static_cast<double>(total) * out.per_stratum[h];
        patients += total;
    }
    if (!any_untied) {
        throw UndefinedStatisticError("PW undefined: every stratum has tied treatments");
    }
    if (patients > 0) out.marginal = weighted / static_cast<double>(patients);
    return out;
}

unsigned resolve_threads(unsigned requested) {
    if (const char* env = std::getenv("IUD_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    if (requested == 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : hw;
    }
    return requested;
}

namespace {

struct CheckpointMetrics {
    double inf_p = 0.0;
    double inf_theta = 0.0;
    Vector inf_p_stratum;
    Vector inf_theta_stratum;
    Vector pw_stratum;
    std::vector<bool> pw_defined;
    std::optional<double> pw;
};

struct ReplicateMetrics {
    bool ok = false;
    std::vector<CheckpointMetrics> checkpoints;
};

// Mean and standard error over the values that are present, in slot order.
class Accumulator {
public:
    void add(double x) { values_.push_back(x); }
    std::uint64_t count() const { return values_.size(); }
    double mean() const {
        double s = 0.0;
        for (double v : values_) s += v;
        return values_.empty() ? std::numeric_limits<double>::quiet_NaN() : s / values_.size();
    }
    double se() const {
        if (values_.size() < 2) return 0.0;
        const double m = mean();
        double ss = 0.0;
        for (double v : values_) ss += (v - m) * (v - m);
        const double n = static_cast<double>(values_.size());
        return std::sqrt(ss / (n - 1.0) / n);
    }

private:
    std::vector<double> values_;
};

} // namespace

MetricsSummary run_monte_carlo(const TrialConfig& config, const Scenario& scenario,
                               std::uint64_t replicates, const std::string& mechanism_label,
                               unsigned threads) {
    if (replicates < 1) throw ConfigurationError("replicates: need M >= 1");
    validate(config);
    const std::vector<Count> checkpoints = resolved_checkpoints(config);
    const Index strata = config.strata;

    auto per_replicate = [&](std::uint64_t r, Xoshiro256& rng) {
        ReplicateMetrics out;
        try {
            TrialTrace trace = run_trial(config, scenario, rng);
            trace.replicate = r;
            for (std::size_t c = 0; c < trace.steps.size(); ++c) {
                CheckpointMetrics m;
                const InfMetric ip = inf_metric(trace, c, Estimator::UrnProportion);
                const InfMetric it = inf_metric(trace, c, Estimator::ThetaHat);
                m.inf_p = ip.total;
                m.inf_theta = it.total;
                m.inf_p_stratum = ip.per_stratum;
                m.inf_theta_stratum = it.per_stratum;
                try {
                    PwMetric pw = pw_metric(trace, c);
                    m.pw_stratum = pw.per_stratum;
                    m.pw_defined = pw.defined;
                    m.pw = pw.marginal;
                } catch (const UndefinedStatisticError&) {
                    m.pw_defined.assign(static_cast<std::size_t>(strata), false);
                }
                out.checkpoints.push_back(std::move(m));
            }
            out.ok = true;
        } catch (const ConfigurationError&) {
            throw;
        } catch (const UnsupportedMetricError&) {
            throw;
        } catch (const std::exception&) {
            out.ok = false;
        }
        return out;
    };
    const std::vector<ReplicateMetrics> results = map_replicates<ReplicateMetrics>(
        config.seed, replicates, resolve_threads(threads), per_replicate);

    MetricsSummary summary;
    summary.replicates = replicates;
    for (const auto& r : results) {
        if (!r.ok) ++summary.failed;
    }
    auto emit = [&](Count n, const char* metric, const char* estimator, const std::string& stratum,
                    const Accumulator& acc) {
        if (acc.count() == 0) return;
        summary.rows.push_back(MetricRow{scenario.name, mechanism_label, estimator, n, metric,
                                         stratum, acc.mean(), acc.se(), acc.count()});
    };
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        Accumulator inf_p, inf_theta, pw;
        std::vector<Accumulator> inf_p_h(strata), inf_theta_h(strata), pw_h(strata);
        for (const auto& r : results) {
            if (!r.ok) continue;
            const CheckpointMetrics& m = r.checkpoints[c];
            inf_p.add(m.inf_p);
            inf_theta.add(m.inf_theta);
            if (m.pw) pw.add(*m.pw);
            for (Index h = 0; h < strata; ++h) {
                inf_p_h[h].add(m.inf_p_stratum[h]);
                inf_theta_h[h].add(m.inf_theta_stratum[h]);
                if (m.pw_defined[h]) pw_h[h].add(m.pw_stratum[h]);
            }
        }
        const Count n = checkpoints[c];
        emit(n, "INF", "P", "all", inf_p);
        emit(n, "INF", "theta_hat", "all", inf_theta);
        emit(n, "PW", "none", "all", pw);
        for (Index h = 0; h < strata; ++h) {
            const std::string id = std::to_string(h + 1);
            emit(n, "INF", "P", id, inf_p_h[h]);
            emit(n, "INF", "theta_hat", id, inf_theta_h[h]);
            emit(n, "PW", "none", id, pw_h[h]);
        }
    }
    return summary;
}

} // namespace iud
