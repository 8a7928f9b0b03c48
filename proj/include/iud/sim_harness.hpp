#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "iud/scenario.hpp"
#include "iud/trial_config.hpp"
#include "iud/trial_core.hpp"

namespace iud {

// Snapshots of one simulated trial at its checkpoints.
struct TrialTrace {
    TrialConfig config;
    std::string scenario;
    std::uint64_t replicate = 0;
    Matrix theta; // realized truth, J x H
    std::vector<Count> steps;
    std::vector<CountsTensor> counts;
    std::vector<Matrix> urn; // P at each checkpoint

    // Index of the snapshot taken at `step`, if any.
    std::optional<std::size_t> find(Count step) const;
};

// Covariate -> urn proportions at step n -> allocation probabilities ->
// assignment -> outcome -> record, for n = 0 .. horizon - 1.
TrialTrace run_trial(const TrialConfig& config, const Scenario& scenario, Xoshiro256& rng);

enum class Estimator { UrnProportion, ThetaHat };

std::string_view to_string(Estimator estimator);

struct InfMetric {
    double total;
    Vector per_stratum; // |(E_1 - E_2) - (theta_1 - theta_2)| per stratum
};

// Euclidean error of the estimated treatment difference across strata (J = 2).
InfMetric inf_metric(const TrialTrace& trace, std::size_t snapshot, Estimator estimator);

struct PwMetric {
    Vector per_stratum;       // NaN where undefined
    std::vector<bool> defined; // false for tied truth or an empty stratum
    std::optional<double> marginal;
};

// Share of each stratum's patients on the worse arm, and its patient-weighted
// average over untied strata (J = 2).
PwMetric pw_metric(const TrialTrace& trace, std::size_t snapshot);

class UnsupportedMetricError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Resolves the worker count: IUD_THREADS overrides `requested`; 0 means hardware.
unsigned resolve_threads(unsigned requested);

// Runs `per_replicate(r, rng)` for r in [0, M) on `threads` workers. Each
// replicate owns the generator seeded by (seed ^ r) and writes its own slot,
// so results do not depend on scheduling.
template <typename Result>
std::vector<Result> map_replicates(std::uint64_t seed, std::uint64_t replicates, unsigned threads,
                                   const std::function<Result(std::uint64_t, Xoshiro256&)>& per_replicate) {
    std::vector<Result> slots(replicates);
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (std::uint64_t r = next++; r < replicates; r = next++) {
            Xoshiro256 rng = replicate_stream(seed, r);
            slots[r] = per_replicate(r, rng);
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(replicates)));
    if (n == 1) {
        worker();
        return slots;
    }
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return slots;
}

struct MetricRow {
    std::string scenario;
    std::string mechanism;
    std::string estimator; // "P", "theta_hat" or "none"
    Count n;
    std::string metric;    // "INF" or "PW"
    std::string stratum;   // "all" or a 1-based stratum id
    double mean;
    double se;
    std::uint64_t replicates;
};

struct MetricsSummary {
    std::vector<MetricRow> rows;
    std::uint64_t replicates = 0;
    std::uint64_t failed = 0;
};

// Runs M replicates and reduces INF (both estimators) and PW per checkpoint.
// Replicates that throw are counted in `failed` and left out of the means.
MetricsSummary run_monte_carlo(const TrialConfig& config, const Scenario& scenario,
                               std::uint64_t replicates, const std::string& mechanism_label,
                               unsigned threads = 1);

} // namespace iud
