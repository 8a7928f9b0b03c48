#pragma once

#include <vector>

#include "iud/allocation.hpp"
#include "iud/sim_harness.hpp"
#include "iud/trial_core.hpp"
#include "iud/types.hpp"

namespace iud {

// f(theta_j) / sum_l f(theta_l) for one stratum's column of rates.
Vector limit_proportions(const Eigen::Ref<const Vector>& theta, const AllocationRule& rule);

struct LimitQuantities {
    Matrix pi; // J x H, columns sum to one
    Matrix v;  // J x H, theta (1 - theta) / (p_h pi)
    Vector mu; // per-stratum drift of (j, l)
};

LimitQuantities limit_quantities(const Matrix& theta, const Eigen::Ref<const Vector>& covariate_probs,
                                 const AllocationRule& rule, Index j, Index l);

// (theta_j - theta_l) / sqrt(v_j + v_l) in stratum h.
double drift(const Matrix& theta, const Eigen::Ref<const Vector>& covariate_probs,
             const AllocationRule& rule, Index j, Index l, Index h);

// A rate with the sample size it is averaged over.
struct ArmEstimate {
    double rate;
    double size;
};

struct Interval {
    double lo;
    double hi;
};

// (r_j - r_l) / sqrt(r_j (1 - r_j) / N_j + r_l (1 - r_l) / N_l).
double wald_statistic(const ArmEstimate& j, const ArmEstimate& l);
double wald_statistic(const CountsTensor& counts, Index j, Index l, Index h);

// Difference of rates plus or minus z_{1 - a/2} times the Wald standard error.
Interval confidence_interval(const ArmEstimate& j, const ArmEstimate& l, double level);
Interval confidence_interval(const CountsTensor& counts, Index j, Index l, Index h, double level);

// Two-sided normal p-value of a Wald statistic.
double wald_p_value(double u);

// Quadratic-form test that all J rates of stratum h agree; J - 1 degrees of freedom.
double homogeneity_chi2(const CountsTensor& counts, Index h);
double homogeneity_p_value(double chi2, Index treatments);

// Wald statistic with the urn proportion as point estimate. `effective` adds
// the counts of the strata treatment j currently borrows from (similarity
// mechanism); this scaling is for reporting and is not calibrated.
enum class SampleSize { Own, Effective };
double wald_statistic_urn(const CountsTensor& counts, const Matrix& urn, Index j, Index l, Index h,
                          SampleSize size = SampleSize::Own, double c = 0.0);

// N_{j,h} plus the counts of the strata in the similarity set of (j, h) at threshold c.
Count effective_sample_size(const CountsTensor& counts, Index j, Index h, double c);

struct SequentialPath {
    Index j;
    Index l;
    Index h;
    std::vector<double> times;
    std::vector<Count> steps;
    std::vector<double> statistics;
};

// Wald statistics on the snapshots at floor(n t_k). Throws ConfigurationError
// when a snapshot is missing.
SequentialPath sequential_path(const TrialTrace& trace, Index j, Index l, Index h,
                               const std::vector<double>& times);

// sqrt(floor(n t_i) / floor(n t_j)) for t_i <= t_j.
double canonical_covariance(double t_i, double t_j, Count n);

} // namespace iud
