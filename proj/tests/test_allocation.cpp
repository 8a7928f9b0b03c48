#include <doctest.h>

#include <random>

#include "iud/allocation.hpp"
#include "iud/rng.hpp"

using namespace iud;

TEST_CASE("f_eval values and guards") {
    const AllocationRule f = AllocationRule::inverse_complement();
    CHECK(f_eval(f, 0.5) == 2.0);
    CHECK(f_eval(f, 0.0) == 1.0);
    CHECK(f_eval(f, 1.0) == 1e6);
    CHECK(f_eval(AllocationRule::constant(), 0.3) == 1.0);
    CHECK(f_eval(AllocationRule::power(2.0, 1e-6), 0.0) > 0.0);
    CHECK(f_eval(AllocationRule::power(2.0, 0.0), 0.5) == 0.25);
    CHECK_THROWS_AS(f_eval(f, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(f_eval(f, 1.1), std::invalid_argument);
}

TEST_CASE("allocation_probs examples") {
    Vector p(2);
    p << 0.5, 0.1;
    const Vector a = allocation_probs(p, AllocationRule::inverse_complement());
    CHECK(a[0] == doctest::Approx(9.0 / 14.0).epsilon(1e-14));
    CHECK(a[1] == doctest::Approx(5.0 / 14.0).epsilon(1e-14));
    const Vector equal = allocation_probs(Vector::Constant(4, 0.3), AllocationRule::inverse_complement());
    for (Index j = 0; j < 4; ++j) CHECK(equal[j] == doctest::Approx(0.25));
    const Vector cr = allocation_probs(p, AllocationRule::constant());
    CHECK(cr[0] == 0.5);
    CHECK(cr[1] == 0.5);
}

TEST_CASE("property: simplex, permutation equivariance and monotonicity") {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const AllocationRule rules[] = {AllocationRule::inverse_complement(), AllocationRule::power(1.5),
                                    AllocationRule::constant()};
    int violations = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const AllocationRule& rule = rules[rep % 3];
        const int J = std::uniform_int_distribution<int>(2, 6)(gen);
        Vector p(J);
        for (Index j = 0; j < J; ++j) p[j] = u(gen);
        const Vector a = allocation_probs(p, rule);
        if ((a.array() <= 0.0).any() || std::abs(a.sum() - 1.0) > 1e-12) ++violations;

        Vector reversed = p.reverse();
        const Vector b = allocation_probs(reversed, rule);
        if ((b.reverse() - a).cwiseAbs().maxCoeff() > 1e-15) ++violations;

        const Index k = std::uniform_int_distribution<int>(0, J - 1)(gen);
        Vector raised = p;
        raised[k] = p[k] + (1.0 - p[k]) * 0.5;
        const Vector c = allocation_probs(raised, rule);
        if (rule.kind == AllocationRule::Kind::Constant) {
            if ((c - a).cwiseAbs().maxCoeff() > 0.0) ++violations;
        } else if (raised[k] > p[k]) {
            if (!(c[k] > a[k])) ++violations;
            for (Index j = 0; j < J; ++j) {
                if (j != k && c[j] > a[j] + 1e-15) ++violations;
            }
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("draws are deterministic given the generator") {
    Vector probs(3);
    probs << 0.2, 0.5, 0.3;
    Xoshiro256 a(7), b(7);
    for (int k = 0; k < 1000; ++k) {
        CHECK(draw_assignment(probs, a) == draw_assignment(probs, b));
        CHECK(draw_outcome(0.4, a) == draw_outcome(0.4, b));
    }
}

TEST_CASE("degenerate draws") {
    Xoshiro256 rng(1);
    Vector point(5);
    point << 1, 0, 0, 0, 0;
    Vector first(2);
    first << 1, 0;
    for (int k = 0; k < 1000; ++k) {
        CHECK(draw_covariate(point, rng) == 0);
        CHECK(draw_assignment(first, rng) == 0);
        CHECK(draw_outcome(1.0, rng));
        CHECK_FALSE(draw_outcome(0.0, rng));
    }
}

TEST_CASE("Monte Carlo frequencies of covariates and outcomes") {
    const int draws = 100000;
    auto frequencies = [&](const Vector& p, std::uint64_t seed) {
        Xoshiro256 rng(seed);
        Vector f = Vector::Zero(p.size());
        for (int k = 0; k < draws; ++k) f[draw_covariate(p, rng)] += 1.0;
        return Vector(f / draws);
    };
    const Vector uniform = Vector::Constant(5, 0.2);
    const Vector f1 = frequencies(uniform, 17);
    for (Index h = 0; h < 5; ++h) CHECK(std::abs(f1[h] - 0.2) <= 0.01);

    Vector skewed(5);
    skewed << 0.3, 0.3, 0.05, 0.05, 0.3;
    const Vector f2 = frequencies(skewed, 18);
    for (Index h = 0; h < 5; ++h) CHECK(std::abs(f2[h] - skewed[h]) <= 0.01);

    Xoshiro256 rng(19);
    int successes = 0;
    for (int k = 0; k < draws; ++k) successes += draw_outcome(0.3, rng);
    CHECK(std::abs(successes / double(draws) - 0.3) <= 0.01);
}

TEST_CASE("replicate streams differ and are reproducible") {
    Xoshiro256 a = replicate_stream(42, 0);
    Xoshiro256 b = replicate_stream(42, 1);
    Xoshiro256 c = replicate_stream(42, 0);
    CHECK_FALSE(a == b);
    CHECK(a == c);
    CHECK(a() == c());
    const double x = uniform01(a);
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
}
