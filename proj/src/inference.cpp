#include "iud/inference.hpp"

#include <cmath>
#include <Eigen/LU>

#include "iud/special_functions.hpp"
#include "iud/urn_mechanisms.hpp"

namespace iud {

Vector limit_proportions(const Eigen::Ref<const Vector>& theta, const AllocationRule& rule) {
    return allocation_probs(theta, rule);
}

LimitQuantities limit_quantities(const Matrix& theta, const Eigen::Ref<const Vector>& covariate_probs,
                                 const AllocationRule& rule, Index j, Index l) {
    const Index treatments = theta.rows();
    const Index strata = theta.cols();
    if (covariate_probs.size() != strata) {
        throw std::invalid_argument("limit_quantities: p must have one entry per stratum");
    }
    if (j < 0 || j >= treatments || l < 0 || l >= treatments) {
        throw std::out_of_range("limit_quantities: treatment index");
    }
    LimitQuantities out{Matrix(treatments, strata), Matrix(treatments, strata), Vector(strata)};
    for (Index h = 0; h < strata; ++h) {
        out.pi.col(h) = limit_proportions(theta.col(h), rule);
        for (Index k = 0; k < treatments; ++k) {
            const double t = theta(k, h);
            out.v(k, h) = t * (1.0 - t) / (covariate_probs[h] * out.pi(k, h));
        }
        const double diff = theta(j, h) - theta(l, h);
        out.mu[h] = diff == 0.0 ? 0.0 : diff / std::sqrt(out.v(j, h) + out.v(l, h));
    }
    return out;
}

double drift(const Matrix& theta, const Eigen::Ref<const Vector>& covariate_probs,
             const AllocationRule& rule, Index j, Index l, Index h) {
    if (h < 0 || h >= theta.cols()) throw std::out_of_range("drift: stratum index");
    return limit_quantities(theta, covariate_probs, rule, j, l).mu[h];
}

namespace {

ArmEstimate own_estimate(const CountsTensor& counts, Index j, Index h) {
    counts.check_index(j, h);
    const Count n = counts.assigned(j, h);
    if (n < 1) throw InsufficientDataError("no patients on treatment " + std::to_string(j + 1) +
                                           " in stratum " + std::to_string(h + 1));
    return {static_cast<double>(counts.successes(j, h)) / static_cast<double>(n),
            static_cast<double>(n)};
}

double standard_error(const ArmEstimate& j, const ArmEstimate& l) {
    if (!(j.size > 0.0 && l.size > 0.0)) throw InsufficientDataError("empty arm");
    return std::sqrt(j.rate * (1.0 - j.rate) / j.size + l.rate * (1.0 - l.rate) / l.size);
}

} // namespace

double wald_statistic(const ArmEstimate& j, const ArmEstimate& l) {
    const double se = standard_error(j, l);
    if (!(se > 0.0)) throw UndefinedStatisticError("Wald statistic: zero estimated variance in both arms");
    return (j.rate - l.rate) / se;
}

double wald_statistic(const CountsTensor& counts, Index j, Index l, Index h) {
    return wald_statistic(own_estimate(counts, j, h), own_estimate(counts, l, h));
}

Interval confidence_interval(const ArmEstimate& j, const ArmEstimate& l, double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must lie in (0, 1)");
    const double z = special::normal_quantile(0.5 + 0.5 * level);
    const double half = z * standard_error(j, l);
    const double diff = j.rate - l.rate;
    return {diff - half, diff + half};
}

Interval confidence_interval(const CountsTensor& counts, Index j, Index l, Index h, double level) {
    return confidence_interval(own_estimate(counts, j, h), own_estimate(counts, l, h), level);
}

double wald_p_value(double u) { return 2.0 * special::normal_cdf(-std::abs(u)); }

double homogeneity_chi2(const CountsTensor& counts, Index h) {
    const Index treatments = counts.treatments();
    if (treatments < 2) throw std::invalid_argument("homogeneity_chi2: need at least two treatments");
    Vector rate(treatments);
    Vector scaled_var(treatments);
    for (Index k = 0; k < treatments; ++k) {
        const ArmEstimate e = own_estimate(counts, k, h);
        rate[k] = e.rate;
        scaled_var[k] = e.rate * (1.0 - e.rate) / e.size;
    }
    // A^T theta has entries theta_1 - theta_k; A^T D A = d_1 11^T + diag(d_2..d_J).
    const Index m = treatments - 1;
    const Vector contrast = Vector::Constant(m, rate[0]) - rate.tail(m);
    Matrix inner = Matrix::Constant(m, m, scaled_var[0]);
    inner.diagonal() += scaled_var.tail(m);
    const Eigen::FullPivLU<Matrix> lu(inner);
    if (!lu.isInvertible()) {
        throw SingularMatrixError("homogeneity_chi2: covariance of the contrasts is singular");
    }
    return contrast.dot(lu.solve(contrast));
}

double homogeneity_p_value(double chi2, Index treatments) {
    return special::chi_squared_sf(chi2, static_cast<double>(treatments - 1));
}

Count effective_sample_size(const CountsTensor& counts, Index j, Index h, double c) {
    Count n = counts.assigned(j, h);
    for (Index k : similarity_set(counts, j, h, c)) n += counts.assigned(j, k);
    return n;
}

double wald_statistic_urn(const CountsTensor& counts, const Matrix& urn, Index j, Index l, Index h,
                          SampleSize size, double c) {
    counts.check_index(j, h);
    counts.check_index(l, h);
    if (urn.rows() != counts.treatments() || urn.cols() != counts.strata()) {
        throw std::invalid_argument("wald_statistic_urn: urn matrix shape differs from counts");
    }
    auto arm = [&](Index k) {
        const Count n = size == SampleSize::Own ? counts.assigned(k, h)
                                                : effective_sample_size(counts, k, h, c);
        if (n < 1) throw InsufficientDataError("no patients on treatment " + std::to_string(k + 1));
        return ArmEstimate{urn(k, h), static_cast<double>(n)};
    };
    return wald_statistic(arm(j), arm(l));
}

SequentialPath sequential_path(const TrialTrace& trace, Index j, Index l, Index h,
                               const std::vector<double>& times) {
    if (times.empty()) throw std::invalid_argument("sequential_path: need at least one time");
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!(times[k] > 0.0 && times[k] <= 1.0)) {
            throw std::invalid_argument("sequential_path: times must lie in (0, 1]");
        }
        if (k > 0 && !(times[k] > times[k - 1])) {
            throw std::invalid_argument("sequential_path: times must be ascending");
        }
    }
    SequentialPath path{j, l, h, times, information_steps(trace.config.horizon, times), {}};
    for (Count step : path.steps) {
        const auto snapshot = trace.find(step);
        if (!snapshot) {
            throw ConfigurationError("trace has no snapshot at step " + std::to_string(step));
        }
        path.statistics.push_back(wald_statistic(trace.counts[*snapshot], j, l, h));
    }
    return path;
}

double canonical_covariance(double t_i, double t_j, Count n) {
    if (!(t_i > 0.0 && t_i <= t_j && t_j <= 1.0)) {
        throw std::invalid_argument("canonical_covariance: need 0 < t_i <= t_j <= 1");
    }
    if (n < 1) throw std::invalid_argument("canonical_covariance: n must be positive");
    const std::vector<Count> steps = information_steps(n, {t_i, t_j});
    if (steps[1] == 0) throw InsufficientDataError("canonical_covariance: floor(n t_j) is zero");
    return std::sqrt(static_cast<double>(steps[0]) / static_cast<double>(steps[1]));
}

} // namespace iud
