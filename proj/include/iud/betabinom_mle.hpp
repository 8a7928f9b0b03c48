#pragma once

#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "iud/trial_core.hpp"
#include "iud/types.hpp"

namespace iud {

// Per-stratum (trials, successes) pairs for one treatment.
struct AggregatedSample {
    std::vector<Count> trials;
    std::vector<Count> successes;

    AggregatedSample() = default;
    // Throws std::invalid_argument unless lengths match and 0 <= s_h <= n_h.
    AggregatedSample(std::vector<Count> trials, std::vector<Count> successes);

    static AggregatedSample from_counts(const CountsTensor& counts, Index treatment);

    std::size_t size() const { return trials.size(); }
    Count total_trials() const;
    Count total_successes() const;
    Count total_failures() const { return total_trials() - total_successes(); }

    // Successes and failures exchanged.
    AggregatedSample flipped() const;
};

struct MleOptions {
    double m_max = 1e6;        // cap on alpha + beta
    double m_min = 1e-4;       // floor on alpha + beta
    double tol = 1e-8;
    int max_iters = 200;
    double default_prior = 1.0; // varsigma
    int grid_points = 41;       // log-spaced profile scan over alpha + beta
};

// Throws std::invalid_argument on inconsistent options.
void validate(const MleOptions& opts);

enum class MleStatus { Interior, PooledBoundary, DefaultPrior };

std::string_view to_string(MleStatus status);

struct MleResult {
    double alpha = 0.0;  // +inf for PooledBoundary
    double beta = 0.0;   // +inf for PooledBoundary
    MleStatus status = MleStatus::DefaultPrior;
    double log_likelihood = 0.0;
    double mean = 0.5;   // alpha / (alpha + beta); the pooled rate at the boundary

    double concentration() const { return alpha + beta; }
};

class DegenerateSampleError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when the optimizer runs out of iterations; carries the best point seen.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, MleResult best)
        : std::runtime_error(what), best_(best) {}
    const MleResult& best() const { return best_; }

private:
    MleResult best_;
};

double betabin_log_pmf(Count n, double alpha, double beta, Count s);

// sum_h [ln B(alpha + s_h, beta + n_h - s_h) - ln B(alpha, beta)]; strata with
// n_h = 0 contribute nothing.
double profile_log_likelihood(const AggregatedSample& sample, double alpha, double beta);

// Sufficient condition for a finite interior maximum:
// sum_h n_h^2 (s_h/n_h - s/n)^2 > n (s/n)(1 - s/n).
bool variance_condition(const AggregatedSample& sample);

// Limit of the profile log-likelihood as alpha + beta -> infinity with
// alpha/(alpha + beta) -> s/n, i.e. n [z ln z + (1 - z) ln(1 - z)] at z = s/n.
// Throws DegenerateSampleError when s = 0 or s = n.
double boundary_supremum(const AggregatedSample& sample);

// Maximum-likelihood (alpha, beta) of the Beta prior under the Beta-Binomial
// marginal. Scans alpha + beta on a log grid, maximizes over the mean at each
// grid point (concave in the mean), then refines with Brent's method.
MleResult fit_mle(const AggregatedSample& sample, const MleOptions& opts);

// Local Newton refinement from a previous Interior fit; falls back to fit_mle
// whenever the local solve leaves the feasible box or lands below the boundary
// supremum. Intended for per-step refits along a trial where counts move by one.
MleResult refit_mle(const AggregatedSample& sample, const MleOptions& opts,
                    const MleResult& previous);

using Partition = std::vector<std::vector<Index>>;

// Sorts strata by rate and cuts wherever consecutive rates differ by more than
// `threshold`. Blocks come out ordered by rate, ids ascending inside a block.
Partition cluster_strata(std::span<const double> rates, double threshold);

AggregatedSample aggregate_blocks(const AggregatedSample& sample, const Partition& partition);

MleResult fit_mle_clustered(const AggregatedSample& sample, const Partition& partition,
                            const MleOptions& opts);

} // namespace iud
