#include <doctest.h>

#include <cmath>
#include <random>

#include "iud/special_functions.hpp"

using namespace iud::special;

TEST_CASE("log_gamma agrees with the C library across scales") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> e(-6.0, 9.0);
    for (int k = 0; k < 2000; ++k) {
        const double x = std::pow(10.0, e(gen));
        const double ref = std::lgamma(x);
        CHECK(log_gamma(x) == doctest::Approx(ref).epsilon(1e-13).scale(1.0));
    }
    CHECK(std::abs(log_gamma(1.0)) < 1e-13);
    CHECK(std::abs(log_gamma(2.0)) < 1e-13);
    CHECK(log_gamma(0.5) == doctest::Approx(0.5 * std::log(M_PI)).epsilon(1e-14));
}

TEST_CASE("digamma and trigamma against closed forms and differences") {
    const double euler = 0.57721566490153286;
    CHECK(digamma(1.0) == doctest::Approx(-euler).epsilon(1e-14));
    CHECK(digamma(0.5) == doctest::Approx(-euler - 2.0 * std::log(2.0)).epsilon(1e-14));
    CHECK(trigamma(1.0) == doctest::Approx(M_PI * M_PI / 6.0).epsilon(1e-13));
    CHECK(trigamma(0.5) == doctest::Approx(M_PI * M_PI / 2.0).epsilon(1e-13));
    for (double x : {1e-3, 0.3, 2.5, 11.0, 250.0, 1e5}) {
        const double h = 1e-5 * x;
        const double numeric = (log_gamma(x + h) - log_gamma(x - h)) / (2.0 * h);
        CHECK(digamma(x) == doctest::Approx(numeric).epsilon(1e-6));
        CHECK(digamma(x + 1.0) - digamma(x) == doctest::Approx(1.0 / x).epsilon(1e-10));
        CHECK(trigamma(x) - trigamma(x + 1.0) == doctest::Approx(1.0 / (x * x)).epsilon(1e-9));
    }
}

TEST_CASE("rising-factorial helpers match the gamma-function forms") {
    for (double a : {1e-4, 0.2, 1.0, 7.5, 300.0, 4e5}) {
        for (std::int64_t k : {0, 1, 5, 32, 33, 400}) {
            double exact = 0.0, dig = 0.0, tri = 0.0;
            for (std::int64_t i = 0; i < k; ++i) {
                exact += std::log(a + i);
                dig += 1.0 / (a + i);
                tri += 1.0 / ((a + i) * (a + i));
            }
            CHECK(log_rising(a, k) == doctest::Approx(exact).epsilon(1e-11).scale(1.0));
            CHECK(digamma_diff(a, k) == doctest::Approx(dig).epsilon(1e-9).scale(1e-12));
            CHECK(trigamma_diff(a, k) == doctest::Approx(tri).epsilon(1e-8).scale(1e-12));
        }
    }
}

TEST_CASE("normal quantile and cdf") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(normal_quantile(0.75) == doctest::Approx(0.6744897501960817).epsilon(1e-12));
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-10));
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(1e-12, 1.0 - 1e-12);
    for (int k = 0; k < 2000; ++k) {
        const double p = u(gen);
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("chi-squared tail probabilities") {
    CHECK(chi_squared_sf(3.841458820694124, 1.0) == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(chi_squared_sf(5.991464547107979, 2.0) == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(chi_squared_sf(0.0, 3.0) == 1.0);
    for (double x : {0.1, 1.0, 4.0, 25.0}) {
        CHECK(chi_squared_sf(x, 2.0) == doctest::Approx(std::exp(-x / 2.0)).epsilon(1e-12));
        CHECK(chi_squared_sf(x, 1.0) == doctest::Approx(std::erfc(std::sqrt(x / 2.0))).epsilon(1e-11));
    }
    CHECK(xlogx(0.0) == 0.0);
    CHECK(xlogx(0.5) == doctest::Approx(0.5 * std::log(0.5)));
}
