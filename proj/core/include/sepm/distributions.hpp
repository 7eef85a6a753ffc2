#pragma once

#include <span>
#include <vector>

#include "sepm/rng.hpp"

namespace sepm {

// Gamma(shape, rate); draws are floored at the smallest positive normal so
// they never underflow to exactly zero.  Throws std::invalid_argument on
// nonpositive parameters.
double sample_gamma(double shape, double rate, RngStream& rng);

// Standard normal via Box-Muller.
double sample_normal(RngStream& rng);

// Beta(a, b), clamped away from exact 0/1 (the sweeps take log(1-q)).
double sample_beta(double a, double b, RngStream& rng);

// Dirichlet with nonnegative concentrations; entries with zero concentration
// come out exactly zero.  Throws if every concentration is zero.
std::vector<double> sample_dirichlet(std::span<const double> conc, RngStream& rng);
void sample_dirichlet(std::span<const double> conc, std::span<double> out, RngStream& rng);

// Poisson(lambda), lambda >= 0.  Inversion for small lambda, transformed
// rejection (PTRS) for large.
long long sample_poisson(double lambda, RngStream& rng);

// Zero-truncated Poisson: Poisson(lambda) conditioned on >= 1.  For
// lambda < 1e-10 returns 1 (the limit distribution).
long long sample_truncated_poisson(double lambda, RngStream& rng);

// Chinese restaurant table distribution: number of tables opened by `count`
// customers under concentration a > 0.  Bernoulli loop up to 10^6 customers,
// moment-matched normal approximation beyond (rounded, clamped to [1, n]).
long long sample_crt(long long count, double concentration, RngStream& rng);

// Binomial(n, p).
long long sample_binomial(long long n, double p, RngStream& rng);

// Splits `total` into counts with multinomial weights; the output sums to
// `total` exactly and zero-weight entries stay exactly zero.
std::vector<long long> sample_multinomial_partition(long long total,
                                                    std::span<const double> weights,
                                                    RngStream& rng);
void sample_multinomial_partition(long long total, std::span<const double> weights,
                                  std::span<long long> out, RngStream& rng);

// Sum of `tables` iid Logarithmic(p) draws, each >= 1.  0 < p < 1.
long long sample_sumlog(long long tables, double p, RngStream& rng);

// Single Logarithmic(p) draw (Kemp's second accelerated generator).
long long sample_logarithmic(double p, RngStream& rng);

// Draw from the density proportional to x^(shape-1) exp(-linear*x - quad*x^2)
// on x > 0 via exact rejection with a shifted-rate gamma envelope.  With
// quad = 0 this is Gamma(shape, linear).
double sample_gamma_quad(double shape, double linear, double quad, RngStream& rng);

}  // namespace sepm
