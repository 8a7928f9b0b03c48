#include <doctest.h>

#include <random>

#include "iud/inference.hpp"
#include "iud/special_functions.hpp"
#include "oracles.hpp"

using namespace iud;

namespace {

CountsTensor two_arms(Count sj, Count nj, Count sl, Count nl) {
    CountsTensor c(2, 1);
    c.successes << sj, sl;
    c.failures << nj - sj, nl - sl;
    return c;
}

// A trace whose snapshots all hold the same counts.
TrialTrace constant_trace(const CountsTensor& c, Count horizon, const std::vector<Count>& steps) {
    TrialTrace t;
    t.config.treatments = c.treatments();
    t.config.strata = c.strata();
    t.config.horizon = horizon;
    for (Count s : steps) {
        t.steps.push_back(s);
        t.counts.push_back(c);
        t.urn.push_back(theta_hat_matrix(c));
    }
    return t;
}

} // namespace

TEST_CASE("limit proportions") {
    Vector theta(2);
    theta << 0.5, 0.1;
    const Vector pi = limit_proportions(theta, AllocationRule::inverse_complement());
    CHECK(pi[0] == doctest::Approx(9.0 / 14.0));
    CHECK(pi[1] == doctest::Approx(5.0 / 14.0));
    const Vector same = limit_proportions(Vector::Constant(3, 0.4), AllocationRule::inverse_complement());
    CHECK(same[1] == doctest::Approx(1.0 / 3.0));
    const Vector cr = limit_proportions(theta, AllocationRule::constant());
    CHECK(cr[0] == 0.5);
}

TEST_CASE("confidence interval examples") {
    const CountsTensor c = two_arms(30, 50, 20, 50);
    const Interval ci = confidence_interval(c, 0, 1, 0, 0.95);
    CHECK(ci.lo == doctest::Approx(0.00796).epsilon(1e-4));
    CHECK(ci.hi == doctest::Approx(0.39204).epsilon(1e-4));
    CHECK((ci.lo + ci.hi) / 2 == doctest::Approx(0.2));
    const Interval half = confidence_interval(c, 0, 1, 0, 0.5);
    CHECK((half.hi - half.lo) / 2 == doctest::Approx(0.67449 * std::sqrt(0.0096)).epsilon(1e-5));
    const Interval sym = confidence_interval(two_arms(7, 20, 7, 20), 0, 1, 0, 0.9);
    CHECK(sym.lo == doctest::Approx(-sym.hi));
    CHECK_THROWS_AS(confidence_interval(two_arms(0, 0, 3, 5), 0, 1, 0, 0.95), InsufficientDataError);
}

TEST_CASE("Wald statistic examples") {
    const CountsTensor c = two_arms(30, 50, 20, 50);
    CHECK(wald_statistic(c, 0, 1, 0) == doctest::Approx(0.2 / std::sqrt(0.0096)).epsilon(1e-12));
    CHECK(wald_statistic(c, 0, 1, 0) == doctest::Approx(2.04124).epsilon(1e-5));
    CHECK(wald_statistic(c, 1, 0, 0) == -wald_statistic(c, 0, 1, 0));
    CHECK(wald_statistic(two_arms(4, 9, 4, 9), 0, 1, 0) == 0.0);
    CHECK_THROWS_AS(wald_statistic(two_arms(0, 5, 5, 5), 0, 1, 0), UndefinedStatisticError);
    CHECK_THROWS_AS(wald_statistic(two_arms(1, 5, 0, 0), 0, 1, 0), InsufficientDataError);
    CHECK(wald_p_value(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-10));
}

TEST_CASE("homogeneity statistic") {
    CountsTensor same(3, 1);
    same.successes << 4, 4, 4;
    same.failures << 6, 6, 6;
    CHECK(homogeneity_chi2(same, 0) == 0.0);
    const CountsTensor c = two_arms(30, 50, 20, 50);
    const double u = wald_statistic(c, 0, 1, 0);
    CHECK(homogeneity_chi2(c, 0) == doctest::Approx(u * u).epsilon(1e-12));
    CHECK(homogeneity_p_value(u * u, 2) == doctest::Approx(wald_p_value(u)).epsilon(1e-10));

    CountsTensor singular(3, 1);
    singular.successes << 3, 0, 5;
    singular.failures << 3, 5, 0;
    CHECK_THROWS_AS(homogeneity_chi2(singular, 0), SingularMatrixError);
    CHECK_THROWS_AS(homogeneity_chi2(two_arms(0, 4, 6, 6), 0), SingularMatrixError);
}

TEST_CASE("property: squared Wald equals the homogeneity statistic for two arms") {
    std::mt19937_64 gen(4);
    int checked = 0;
    int violations = 0;
    while (checked < 1000) {
        const CountsTensor c = oracle::random_counts(gen, 2, 3, 40, 0.0);
        for (Index h = 0; h < 3; ++h) {
            double u;
            try {
                u = wald_statistic(c, 0, 1, h);
            } catch (const std::runtime_error&) {
                continue;
            }
            ++checked;
            const double chi = homogeneity_chi2(c, h);
            if (std::abs(u * u - chi) > 1e-10 * std::max(1.0, chi)) ++violations;
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("property: homogeneity statistic ignores the order of non-reference arms") {
    std::mt19937_64 gen(6);
    int checked = 0;
    int violations = 0;
    while (checked < 1000) {
        CountsTensor c = oracle::random_counts(gen, 4, 1, 30, 0.0);
        double base;
        try {
            base = homogeneity_chi2(c, 0);
        } catch (const std::runtime_error&) {
            continue;
        }
        ++checked;
        CountsTensor p = c;
        p.successes.row(1).swap(p.successes.row(3));
        p.failures.row(1).swap(p.failures.row(3));
        if (std::abs(homogeneity_chi2(p, 0) - base) > 1e-10 * std::max(1.0, base)) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("property: confidence interval and Wald test are dual") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> level(0.5, 0.999);
    int checked = 0;
    int violations = 0;
    while (checked < 1000) {
        const CountsTensor c = oracle::random_counts(gen, 2, 1, 25, 0.0);
        double u;
        try {
            u = wald_statistic(c, 0, 1, 0);
        } catch (const std::runtime_error&) {
            continue;
        }
        ++checked;
        const double lv = level(gen);
        const Interval ci = confidence_interval(c, 0, 1, 0, lv);
        const double z = special::normal_quantile(0.5 + 0.5 * lv);
        const bool covers = ci.lo <= 0.0 && 0.0 <= ci.hi;
        if (covers != (std::abs(u) <= z)) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("urn-based Wald statistic and effective sample size") {
    CountsTensor c(2, 3);
    c.successes << 5, 6, 1, 2, 2, 2;
    c.failures << 5, 4, 9, 8, 8, 8;
    const Matrix urn = theta_hat_matrix(c);
    CHECK(wald_statistic_urn(c, urn, 0, 1, 0) == doctest::Approx(wald_statistic(c, 0, 1, 0)));
    CHECK(effective_sample_size(c, 0, 0, 0.15) == 20);
    CHECK(effective_sample_size(c, 1, 0, 0.15) == 30);
    const double own = wald_statistic_urn(c, urn, 0, 1, 0, SampleSize::Own);
    const double eff = wald_statistic_urn(c, urn, 0, 1, 0, SampleSize::Effective, 0.15);
    CHECK(std::abs(eff) > std::abs(own));
}

TEST_CASE("sequential paths") {
    const CountsTensor c = two_arms(30, 50, 20, 50);
    const TrialTrace t = constant_trace(c, 100, {50, 100});
    const SequentialPath end = sequential_path(t, 0, 1, 0, {1.0});
    REQUIRE(end.statistics.size() == 1);
    CHECK(end.statistics[0] == wald_statistic(c, 0, 1, 0));
    const SequentialPath flat = sequential_path(t, 0, 1, 0, {0.5, 1.0});
    CHECK(flat.statistics[0] == flat.statistics[1]);
    CHECK(flat.steps == std::vector<Count>{50, 100});
    CHECK_THROWS_AS(sequential_path(t, 0, 1, 0, {0.3}), ConfigurationError);
    CHECK_THROWS_AS(sequential_path(t, 0, 1, 0, {1.0, 0.5}), std::invalid_argument);
}

TEST_CASE("canonical covariance") {
    CHECK(canonical_covariance(0.7, 0.7, 31) == 1.0);
    CHECK(canonical_covariance(0.5, 1.0, 2000) == doctest::Approx(0.7071068).epsilon(1e-7));
    CHECK(canonical_covariance(0.25, 1.0, 400) == 0.5);
    CHECK(canonical_covariance(0.5, 1.0, 7) == doctest::Approx(std::sqrt(3.0 / 7.0)));
    CHECK_THROWS_AS(canonical_covariance(0.8, 0.5, 100), std::invalid_argument);
    CHECK_THROWS_AS(canonical_covariance(0.0, 0.5, 100), std::invalid_argument);
}

TEST_CASE("drift") {
    Matrix theta(2, 1);
    theta << 0.5, 0.1;
    Vector p(1);
    p << 0.2;
    const LimitQuantities q = limit_quantities(theta, p, AllocationRule::inverse_complement(), 0, 1);
    CHECK(q.pi(0, 0) == doctest::Approx(9.0 / 14.0));
    CHECK(q.v(0, 0) == doctest::Approx(0.25 / (0.2 * 9.0 / 14.0)));
    CHECK(q.v(1, 0) == doctest::Approx(1.26));
    CHECK(q.pi.col(0).sum() == doctest::Approx(1.0));
    const double mu = drift(theta, p, AllocationRule::inverse_complement(), 0, 1, 0);
    CHECK(mu == doctest::Approx(0.4 / std::sqrt(q.v(0, 0) + q.v(1, 0))).epsilon(1e-12));
    CHECK(mu == doctest::Approx(0.22345).epsilon(1e-4));
    Vector p2(1);
    p2 << 0.4;
    CHECK(drift(theta, p2, AllocationRule::inverse_complement(), 0, 1, 0) ==
          doctest::Approx(mu * std::sqrt(2.0)).epsilon(1e-12));
    Matrix tied(2, 1);
    tied << 0.3, 0.3;
    CHECK(drift(tied, p, AllocationRule::inverse_complement(), 0, 1, 0) == 0.0);
}
