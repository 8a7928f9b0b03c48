#include "iud/betabinom_mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "iud/special_functions.hpp"

namespace iud {

namespace sf = iud::special;

AggregatedSample::AggregatedSample(std::vector<Count> n, std::vector<Count> s)
    : trials(std::move(n)), successes(std::move(s)) {
    if (trials.size() != successes.size()) {
        throw std::invalid_argument("sample: trials and successes differ in length");
    }
    for (std::size_t h = 0; h < trials.size(); ++h) {
        if (trials[h] < 0 || successes[h] < 0 || successes[h] > trials[h]) {
            throw std::invalid_argument("sample: need 0 <= s <= n in stratum " +
                                        std::to_string(h));
        }
    }
}

AggregatedSample AggregatedSample::from_counts(const CountsTensor& counts, Index treatment) {
    counts.check_index(treatment, 0);
    std::vector<Count> n(counts.strata());
    std::vector<Count> s(counts.strata());
    for (Index h = 0; h < counts.strata(); ++h) {
        n[h] = counts.assigned(treatment, h);
        s[h] = counts.successes(treatment, h);
    }
    return AggregatedSample(std::move(n), std::move(s));
}

Count AggregatedSample::total_trials() const {
    return std::accumulate(trials.begin(), trials.end(), Count{0});
}

Count AggregatedSample::total_successes() const {
    return std::accumulate(successes.begin(), successes.end(), Count{0});
}

AggregatedSample AggregatedSample::flipped() const {
    std::vector<Count> f(size());
    for (std::size_t h = 0; h < size(); ++h) f[h] = trials[h] - successes[h];
    return AggregatedSample(trials, std::move(f));
}

void validate(const MleOptions& opts) {
    if (!(opts.m_max > 1.0)) throw std::invalid_argument("mle: m_max must exceed 1");
    if (!(opts.m_min > 0.0 && opts.m_min < opts.m_max)) {
        throw std::invalid_argument("mle: need 0 < m_min < m_max");
    }
    if (!(opts.tol > 0.0)) throw std::invalid_argument("mle: tol must be positive");
    if (opts.max_iters < 1) throw std::invalid_argument("mle: max_iters must be positive");
    if (!(opts.default_prior > 0.0)) {
        throw std::invalid_argument("mle: default prior must be positive");
    }
    if (opts.grid_points < 3) throw std::invalid_argument("mle: grid_points must be >= 3");
}

std::string_view to_string(MleStatus status) {
    switch (status) {
    case MleStatus::Interior: return "Interior";
    case MleStatus::PooledBoundary: return "PooledBoundary";
    case MleStatus::DefaultPrior: return "DefaultPrior";
    }
    return "Unknown";
}

double betabin_log_pmf(Count n, double alpha, double beta, Count s) {
    if (n < 0 || s < 0 || s > n || !(alpha > 0.0) || !(beta > 0.0)) {
        throw std::invalid_argument("betabin_log_pmf: need 0 <= s <= n and alpha, beta > 0");
    }
    const double log_choose = sf::log_gamma(static_cast<double>(n) + 1.0) -
                              sf::log_gamma(static_cast<double>(s) + 1.0) -
                              sf::log_gamma(static_cast<double>(n - s) + 1.0);
    return log_choose + sf::log_rising(alpha, s) + sf::log_rising(beta, n - s) -
           sf::log_rising(alpha + beta, n);
}

double profile_log_likelihood(const AggregatedSample& sample, double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw std::invalid_argument("profile_log_likelihood: alpha and beta must be positive");
    }
    const double total = alpha + beta;
    double ll = 0.0;
    for (std::size_t h = 0; h < sample.size(); ++h) {
        const Count n = sample.trials[h];
        if (n == 0) continue;
        const Count s = sample.successes[h];
        ll += sf::log_rising(alpha, s) + sf::log_rising(beta, n - s) - sf::log_rising(total, n);
    }
    return ll;
}

bool variance_condition(const AggregatedSample& sample) {
    const Count n_total = sample.total_trials();
    if (n_total == 0) return false;
    const double pooled = static_cast<double>(sample.total_successes()) /
                          static_cast<double>(n_total);
    double lhs = 0.0;
    for (std::size_t h = 0; h < sample.size(); ++h) {
        const Count n = sample.trials[h];
        if (n == 0) continue;
        const double dev = static_cast<double>(sample.successes[h]) / static_cast<double>(n) -
                           pooled;
        lhs += static_cast<double>(n) * static_cast<double>(n) * dev * dev;
    }
    const double rhs = static_cast<double>(n_total) * pooled * (1.0 - pooled);
    return lhs > rhs;
}

double boundary_supremum(const AggregatedSample& sample) {
    const Count n = sample.total_trials();
    const Count s = sample.total_successes();
    if (s <= 0 || s >= n) {
        throw DegenerateSampleError("boundary_supremum: needs 1 <= s <= n - 1");
    }
    const double z = static_cast<double>(s) / static_cast<double>(n);
    return static_cast<double>(n) * (sf::xlogx(z) + sf::xlogx(1.0 - z));
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// The likelihood over (mean, concentration) for strata with n_h > 0.
class Profile {
public:
    explicit Profile(const AggregatedSample& sample) {
        for (std::size_t h = 0; h < sample.size(); ++h) {
            if (sample.trials[h] == 0) continue;
            s_.push_back(sample.successes[h]);
            f_.push_back(sample.trials[h] - sample.successes[h]);
            n_.push_back(sample.trials[h]);
        }
    }

    double value(double mean, double conc) const {
        const double a = mean * conc;
        const double b = (1.0 - mean) * conc;
        double ll = 0.0;
        for (std::size_t h = 0; h < n_.size(); ++h) {
            ll += sf::log_rising(a, s_[h]) + sf::log_rising(b, f_[h]) - sf::log_rising(conc, n_[h]);
        }
        return ll;
    }

    // Root of the mean-score at fixed concentration. The likelihood is a sum of
    // logs of affine functions of the mean, hence strictly concave in it.
    double best_mean(double conc, double start, int max_iters) const {
        double lo = 0.0;
        double hi = 1.0;
        double mu = std::clamp(start, 1e-12, 1.0 - 1e-12);
        for (int it = 0; it < 4 * max_iters; ++it) {
            const double a = mu * conc;
            const double b = (1.0 - mu) * conc;
            double score = 0.0;
            double curvature = 0.0;
            for (std::size_t h = 0; h < n_.size(); ++h) {
                score += sf::digamma_diff(a, s_[h]) - sf::digamma_diff(b, f_[h]);
                curvature += sf::trigamma_diff(a, s_[h]) + sf::trigamma_diff(b, f_[h]);
            }
            if (score > 0.0) {
                lo = mu;
            } else if (score < 0.0) {
                hi = mu;
            } else {
                return mu;
            }
            double next = mu + score / (conc * curvature);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            const double step = std::abs(next - mu);
            mu = next;
            if (step <= 1e-15 * std::min(mu, 1.0 - mu) || hi - lo <= 4e-16 * hi) break;
        }
        return mu;
    }

    struct Derivatives {
        double value, d_mean, d_log_conc, dd_mean, dd_mean_log_conc, dd_log_conc;
    };

    // Gradient and Hessian in (mean, ln concentration).
    Derivatives derivatives(double mean, double conc) const {
        const double a = mean * conc;
        const double b = (1.0 - mean) * conc;
        double ds = 0, df = 0, dn = 0, ts = 0, tf = 0, tn = 0;
        for (std::size_t h = 0; h < n_.size(); ++h) {
            ds += sf::digamma_diff(a, s_[h]);
            df += sf::digamma_diff(b, f_[h]);
            dn += sf::digamma_diff(conc, n_[h]);
            ts += sf::trigamma_diff(a, s_[h]);
            tf += sf::trigamma_diff(b, f_[h]);
            tn += sf::trigamma_diff(conc, n_[h]);
        }
        const double l_m = mean * ds + (1.0 - mean) * df - dn;
        const double l_mm = -mean * mean * ts - (1.0 - mean) * (1.0 - mean) * tf + tn;
        const double l_mu_m = (ds - df) + conc * (-mean * ts + (1.0 - mean) * tf);
        Derivatives d{};
        d.value = value(mean, conc);
        d.d_mean = conc * (ds - df);
        d.d_log_conc = conc * l_m;
        d.dd_mean = -conc * conc * (ts + tf);
        d.dd_mean_log_conc = conc * l_mu_m;
        d.dd_log_conc = conc * conc * l_mm + conc * l_m;
        return d;
    }

private:
    std::vector<Count> s_, f_, n_;
};

struct ProfilePoint {
    double log_conc;
    double mean;
    double value;
};

// Brent's minimizer applied to -profile(t) on [lo, hi].
ProfilePoint brent_maximize(const Profile& profile, double lo, double hi, double mean_start,
                            const MleOptions& opts, bool& converged) {
    constexpr double kGolden = 0.3819660112501051;
    constexpr double kRelTol = 1e-10;
    constexpr double kAbsTol = 1e-12;
    double last_mean = mean_start;
    auto eval = [&](double t) {
        const double conc = std::exp(t);
        last_mean = profile.best_mean(conc, last_mean, opts.max_iters);
        return ProfilePoint{t, last_mean, profile.value(last_mean, conc)};
    };

    double a = lo;
    double b = hi;
    ProfilePoint x = eval(a + kGolden * (b - a));
    ProfilePoint w = x;
    ProfilePoint v = x;
    double d = 0.0;
    double e = 0.0;
    converged = false;
    for (int it = 0; it < opts.max_iters; ++it) {
        const double m = 0.5 * (a + b);
        const double tol1 = kRelTol * std::abs(x.log_conc) + kAbsTol;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x.log_conc - m) <= tol2 - 0.5 * (b - a)) {
            converged = true;
            break;
        }
        bool golden = true;
        if (std::abs(e) > tol1) {
            // Parabola through x, w, v on -value.
            const double fx = -x.value, fw = -w.value, fv = -v.value;
            double r = (x.log_conc - w.log_conc) * (fx - fv);
            double q = (x.log_conc - v.log_conc) * (fx - fw);
            double p = (x.log_conc - v.log_conc) * q - (x.log_conc - w.log_conc) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            const double e_prev = e;
            e = d;
            if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x.log_conc) &&
                p < q * (b - x.log_conc)) {
                d = p / q;
                const double u = x.log_conc + d;
                if (u - a < tol2 || b - u < tol2) d = m > x.log_conc ? tol1 : -tol1;
                golden = false;
            }
        }
        if (golden) {
            e = (x.log_conc >= m ? a : b) - x.log_conc;
            d = kGolden * e;
        }
        const double u_t = std::abs(d) >= tol1 ? x.log_conc + d
                                               : x.log_conc + (d > 0 ? tol1 : -tol1);
        last_mean = x.mean;
        const ProfilePoint u = eval(u_t);
        if (u.value >= x.value) {
            if (u.log_conc >= x.log_conc) a = x.log_conc; else b = x.log_conc;
            v = w;
            w = x;
            x = u;
        } else {
            if (u.log_conc < x.log_conc) a = u.log_conc; else b = u.log_conc;
            if (u.value >= w.value || w.log_conc == x.log_conc) {
                v = w;
                w = u;
            } else if (u.value >= v.value || v.log_conc == x.log_conc ||
                       v.log_conc == w.log_conc) {
                v = u;
            }
        }
    }
    return x;
}

MleResult pooled_result(const AggregatedSample& sample, double supremum) {
    MleResult r;
    r.alpha = kInf;
    r.beta = kInf;
    r.status = MleStatus::PooledBoundary;
    r.log_likelihood = supremum;
    r.mean = static_cast<double>(sample.total_successes()) /
             static_cast<double>(sample.total_trials());
    return r;
}

MleResult interior_result(const ProfilePoint& p) {
    const double conc = std::exp(p.log_conc);
    MleResult r;
    r.alpha = p.mean * conc;
    r.beta = (1.0 - p.mean) * conc;
    r.status = MleStatus::Interior;
    r.log_likelihood = p.value;
    r.mean = p.mean;
    return r;
}

// Shared front matter: empty and one-sided samples never reach the optimizer.
bool degenerate_fit(const AggregatedSample& sample, const MleOptions& opts, MleResult& out) {
    const Count n = sample.total_trials();
    const Count s = sample.total_successes();
    if (n == 0) {
        out = MleResult{opts.default_prior, opts.default_prior, MleStatus::DefaultPrior, 0.0, 0.5};
        return true;
    }
    if (s == 0 || s == n) {
        const double a = static_cast<double>(s) + opts.default_prior;
        const double b = static_cast<double>(n - s) + opts.default_prior;
        out = MleResult{a, b, MleStatus::DefaultPrior, profile_log_likelihood(sample, a, b),
                        a / (a + b)};
        return true;
    }
    return false;
}

bool below_supremum(double value, double supremum, double tol) {
    return value < supremum - tol * (1.0 + std::abs(supremum));
}

} // namespace

MleResult fit_mle(const AggregatedSample& sample, const MleOptions& opts) {
    validate(opts);
    MleResult degenerate;
    if (degenerate_fit(sample, opts, degenerate)) return degenerate;

    const Profile profile(sample);
    const double supremum = boundary_supremum(sample);
    const double pooled = static_cast<double>(sample.total_successes()) /
                          static_cast<double>(sample.total_trials());

    const double t_lo = std::log(opts.m_min);
    const double t_hi = std::log(opts.m_max);
    const int points = opts.grid_points;
    std::vector<ProfilePoint> grid(points);
    double mean = pooled;
    std::size_t best = 0;
    for (int i = 0; i < points; ++i) {
        const double t = t_lo + (t_hi - t_lo) * i / (points - 1);
        const double conc = std::exp(t);
        mean = profile.best_mean(conc, mean, opts.max_iters);
        grid[i] = ProfilePoint{t, mean, profile.value(mean, conc)};
        if (grid[i].value > grid[best].value) best = static_cast<std::size_t>(i);
    }
    if (best + 1 == grid.size()) {
        return pooled_result(sample, supremum);
    }

    const double lo = grid[best == 0 ? 0 : best - 1].log_conc;
    const double hi = grid[best + 1].log_conc;
    bool converged = false;
    ProfilePoint opt = brent_maximize(profile, lo, hi, grid[best].mean, opts, converged);
    if (grid[best].value > opt.value) opt = grid[best];
    if (!converged) {
        throw SolverError("fit_mle: no convergence within max_iters", interior_result(opt));
    }

    if (opt.log_conc >= t_hi + std::log1p(-opts.tol) ||
        below_supremum(opt.value, supremum, opts.tol)) {
        return pooled_result(sample, supremum);
    }
    return interior_result(opt);
}

MleResult refit_mle(const AggregatedSample& sample, const MleOptions& opts,
                    const MleResult& previous) {
    if (previous.status != MleStatus::Interior) return fit_mle(sample, opts);
    validate(opts);
    MleResult degenerate;
    if (degenerate_fit(sample, opts, degenerate)) return degenerate;

    const Profile profile(sample);
    const double supremum = boundary_supremum(sample);
    const double t_lo = std::log(opts.m_min);
    const double t_hi = std::log(opts.m_max) + std::log1p(-opts.tol);

    double mean = previous.mean;
    double t = std::log(previous.concentration());
    if (!(mean > 0.0 && mean < 1.0) || !(t > t_lo && t < t_hi)) return fit_mle(sample, opts);

    bool converged = false;
    auto d = profile.derivatives(mean, std::exp(t));
    for (int it = 0; it < 50; ++it) {
        const double det = d.dd_mean * d.dd_log_conc - d.dd_mean_log_conc * d.dd_mean_log_conc;
        if (!(d.dd_mean < 0.0 && det > 0.0)) break;
        // Newton step solves H * step = -grad.
        double step_mean = -(d.dd_log_conc * d.d_mean - d.dd_mean_log_conc * d.d_log_conc) / det;
        double step_t = -(d.dd_mean * d.d_log_conc - d.dd_mean_log_conc * d.d_mean) / det;
        double scale = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls, scale *= 0.5) {
            const double m_new = mean + scale * step_mean;
            const double t_new = t + scale * step_t;
            if (!(m_new > 0.0 && m_new < 1.0 && t_new > t_lo && t_new < t_hi)) continue;
            const double v_new = profile.value(m_new, std::exp(t_new));
            if (v_new >= d.value - 1e-12 * (1.0 + std::abs(d.value))) {
                mean = m_new;
                t = t_new;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        d = profile.derivatives(mean, std::exp(t));
        if (std::abs(scale * step_mean) <= 1e-12 * std::min(mean, 1.0 - mean) &&
            std::abs(scale * step_t) <= 1e-10) {
            converged = true;
            break;
        }
    }
    // Near the cap the profile is flat and Newton creeps outward; let the
    // global search decide between a large interior M and the boundary.
    const bool near_cap = t > std::log(opts.m_max) - std::log(10.0);
    if (!converged || near_cap || below_supremum(d.value, supremum, opts.tol)) {
        return fit_mle(sample, opts);
    }
    return interior_result(ProfilePoint{t, mean, d.value});
}

Partition cluster_strata(std::span<const double> rates, double threshold) {
    if (!(threshold > 0.0)) {
        throw std::invalid_argument("cluster_strata: threshold must be positive");
    }
    std::vector<Index> order(rates.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return rates[a] < rates[b]; });
    Partition blocks;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i == 0 || rates[order[i]] - rates[order[i - 1]] > threshold) {
            blocks.emplace_back();
        }
        blocks.back().push_back(order[i]);
    }
    for (auto& block : blocks) std::sort(block.begin(), block.end());
    return blocks;
}

AggregatedSample aggregate_blocks(const AggregatedSample& sample, const Partition& partition) {
    std::vector<int> seen(sample.size(), 0);
    std::vector<Count> n;
    std::vector<Count> s;
    for (const auto& block : partition) {
        Count bn = 0;
        Count bs = 0;
        for (Index h : block) {
            if (h < 0 || static_cast<std::size_t>(h) >= sample.size()) {
                throw std::invalid_argument("partition: stratum id out of range");
            }
            ++seen[h];
            bn += sample.trials[h];
            bs += sample.successes[h];
        }
        n.push_back(bn);
        s.push_back(bs);
    }
    if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
        throw std::invalid_argument("partition: every stratum must appear exactly once");
    }
    return AggregatedSample(std::move(n), std::move(s));
}

MleResult fit_mle_clustered(const AggregatedSample& sample, const Partition& partition,
                            const MleOptions& opts) {
    return fit_mle(aggregate_blocks(sample, partition), opts);
}

} // namespace iud
