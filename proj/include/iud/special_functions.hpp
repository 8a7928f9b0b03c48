#pragma once

#include <cstdint>

// Special functions for positive real arguments. Thread-safe replacements for
// std::lgamma (which writes the global signgam on glibc).
namespace iud::special {

double log_gamma(double x);
double digamma(double x);
double trigamma(double x);

// ln Γ(a+k) − ln Γ(a), ψ(a+k) − ψ(a) and ψ'(a) − ψ'(a+k) for a > 0, k >= 0.
// Small k uses the exact finite sums.
double log_rising(double a, std::int64_t k);
double digamma_diff(double a, std::int64_t k);
double trigamma_diff(double a, std::int64_t k);

double normal_cdf(double x);
// Wichura's AS241, accurate to about 1e-16.
double normal_quantile(double p);

// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);
double chi_squared_sf(double x, double dof);

// x ln x with 0 ln 0 = 0.
double xlogx(double x);

} // namespace iud::special
