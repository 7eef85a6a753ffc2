#include "sepm/special.hpp"

#include <cmath>

namespace sepm {

double digamma(double x) {
    // Shift into the asymptotic region, then expand in 1/x^2.
    double acc = 0.0;
    while (x < 6.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double series = std::log(x) - 0.5 * inv;
    series -= inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)));
    return acc + series;
}

double trigamma(double x) {
    double acc = 0.0;
    while (x < 6.0) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    double series = inv * (1.0 + 0.5 * inv);
    series += inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)));
    return acc + series;
}

double clamp_prob(double p) {
    constexpr double lo = 1e-15;
    constexpr double hi = 1.0 - 1e-15;
    if (p < lo) return lo;
    if (p > hi) return hi;
    return p;
}

}  // namespace sepm
