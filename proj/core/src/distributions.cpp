#include "sepm/distributions.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sepm/special.hpp"

namespace sepm {

namespace {

constexpr double kTinyGamma = std::numeric_limits<double>::min();

// Marsaglia-Tsang squeeze for shape >= 1.
double gamma_ge1(double shape, RngStream& rng) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = sample_normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.next_double_pos();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

// Hormann's PTRS transformed rejection, lambda >= 10.
long long poisson_ptrs(double lambda, RngStream& rng) {
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = rng.next_double() - 0.5;
        const double v = rng.next_double_pos();
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<long long>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        const double k = kf;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            k * loglam - lambda - std::lgamma(k + 1.0)) {
            return static_cast<long long>(kf);
        }
    }
}

long long poisson_inversion(double lambda, RngStream& rng) {
    const double u = rng.next_double();
    double p = std::exp(-lambda);
    double cdf = p;
    long long n = 0;
    while (u > cdf) {
        ++n;
        p *= lambda / static_cast<double>(n);
        cdf += p;
        if (p <= 0.0) break;  // exhausted double precision in the far tail
    }
    return n;
}

// Inversion via geometric skips; cost O(n*q + 1) with q = min(p, 1-p).
long long binomial_small(long long n, double p, RngStream& rng) {
    const bool flipped = p > 0.5;
    const double q = flipped ? 1.0 - p : p;
    const double log1q = std::log1p(-q);
    long long successes = 0;
    long long pos = 0;
    for (;;) {
        const double g = std::floor(std::log(rng.next_double_pos()) / log1q) + 1.0;
        pos += static_cast<long long>(g);
        if (pos > n) break;
        ++successes;
    }
    return flipped ? n - successes : successes;
}

// Hormann's BTRS transformed rejection, n*min(p,1-p) >= 10.
long long binomial_btrs(long long n, double p, RngStream& rng) {
    const bool flipped = p > 0.5;
    const double pp = flipped ? 1.0 - p : p;
    const double nd = static_cast<double>(n);
    const double spq = std::sqrt(nd * pp * (1.0 - pp));
    const double b = 1.15 + 2.53 * spq;
    const double a = -0.0873 + 0.0248 * b + 0.01 * pp;
    const double c = nd * pp + 0.5;
    const double vr = 0.92 - 4.2 / b;
    const double alpha = (2.83 + 5.1 / b) * spq;
    const double lpq = std::log(pp / (1.0 - pp));
    const double m = std::floor((nd + 1.0) * pp);
    const double h = std::lgamma(m + 1.0) + std::lgamma(nd - m + 1.0);
    for (;;) {
        const double u = rng.next_double() - 0.5;
        double v = rng.next_double_pos();
        const double us = 0.5 - std::fabs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + c);
        if (kf < 0.0 || kf > nd) continue;
        if (us >= 0.07 && v <= vr) {
            const long long k = static_cast<long long>(kf);
            return flipped ? n - k : k;
        }
        v = v * alpha / (a / (us * us) + b);
        if (std::log(v) <= h - std::lgamma(kf + 1.0) - std::lgamma(nd - kf + 1.0) +
                               (kf - m) * lpq) {
            const long long k = static_cast<long long>(kf);
            return flipped ? n - k : k;
        }
    }
}

}  // namespace

double sample_normal(RngStream& rng) {
    const double u1 = rng.next_double_pos();
    const double u2 = rng.next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

double sample_gamma(double shape, double rate, RngStream& rng) {
    if (!(shape > 0.0) || !(rate > 0.0)) {
        throw std::invalid_argument("sample_gamma: shape and rate must be positive");
    }
    double x;
    if (shape < 1.0) {
        // Boost via Gamma(shape+1) and a power of a uniform.
        const double g = gamma_ge1(shape + 1.0, rng);
        const double u = rng.next_double_pos();
        x = g * std::pow(u, 1.0 / shape);
    } else {
        x = gamma_ge1(shape, rng);
    }
    x /= rate;
    return x < kTinyGamma ? kTinyGamma : x;
}

double sample_beta(double a, double b, RngStream& rng) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::invalid_argument("sample_beta: parameters must be positive");
    }
    const double x = sample_gamma(a, 1.0, rng);
    const double y = sample_gamma(b, 1.0, rng);
    return clamp_prob(x / (x + y));
}

void sample_dirichlet(std::span<const double> conc, std::span<double> out, RngStream& rng) {
    if (conc.size() != out.size()) {
        throw std::invalid_argument("sample_dirichlet: size mismatch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < conc.size(); ++i) {
        if (conc[i] < 0.0) {
            throw std::invalid_argument("sample_dirichlet: negative concentration");
        }
        out[i] = conc[i] == 0.0 ? 0.0 : sample_gamma(conc[i], 1.0, rng);
        total += out[i];
    }
    if (total <= 0.0) {
        throw std::invalid_argument("sample_dirichlet: all concentrations are zero");
    }
    for (auto& v : out) v /= total;
}

std::vector<double> sample_dirichlet(std::span<const double> conc, RngStream& rng) {
    std::vector<double> out(conc.size());
    sample_dirichlet(conc, std::span<double>(out), rng);
    return out;
}

long long sample_poisson(double lambda, RngStream& rng) {
    if (lambda < 0.0) throw std::invalid_argument("sample_poisson: lambda must be >= 0");
    if (lambda == 0.0) return 0;
    return lambda < 10.0 ? poisson_inversion(lambda, rng) : poisson_ptrs(lambda, rng);
}

long long sample_truncated_poisson(double lambda, RngStream& rng) {
    if (lambda < 0.0) {
        throw std::invalid_argument("sample_truncated_poisson: lambda must be >= 0");
    }
    if (lambda < 1e-10) return 1;
    if (lambda <= 30.0) {
        // Inverse CDF started at n = 1: P(1) = lambda / (e^lambda - 1).
        const double u = rng.next_double();
        double p = lambda / std::expm1(lambda);
        double cdf = p;
        long long n = 1;
        while (u > cdf) {
            ++n;
            p *= lambda / static_cast<double>(n);
            cdf += p;
            if (p <= 0.0) break;
        }
        return n;
    }
    // Rejection from the untruncated Poisson; P(0) = e^-30 is negligible.
    for (;;) {
        const long long x = sample_poisson(lambda, rng);
        if (x >= 1) return x;
    }
}

long long sample_crt(long long count, double concentration, RngStream& rng) {
    if (count < 0) throw std::invalid_argument("sample_crt: count must be >= 0");
    if (!(concentration > 0.0)) {
        throw std::invalid_argument("sample_crt: concentration must be positive");
    }
    if (count == 0) return 0;
    constexpr long long kDirectLimit = 1'000'000;
    if (count <= kDirectLimit) {
        const double a = concentration;
        long long tables = 1;  // the first customer always opens a table
        for (long long i = 2; i <= count; ++i) {
            if (rng.next_double() * (a + static_cast<double>(i) - 1.0) < a) ++tables;
        }
        return tables;
    }
    const double a = concentration;
    const double n = static_cast<double>(count);
    const double mean = a * (digamma(a + n) - digamma(a));
    const double var = mean - a * a * (trigamma(a) - trigamma(a + n));
    double draw = mean + std::sqrt(var > 0.0 ? var : 0.0) * sample_normal(rng);
    draw = std::round(draw);
    if (draw < 1.0) draw = 1.0;
    if (draw > n) draw = n;
    return static_cast<long long>(draw);
}

long long sample_binomial(long long n, double p, RngStream& rng) {
    if (n < 0) throw std::invalid_argument("sample_binomial: n must be >= 0");
    if (p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (n == 0) return 0;
    const double q = p < 0.5 ? p : 1.0 - p;
    if (n <= 64 || static_cast<double>(n) * q <= 30.0) return binomial_small(n, p, rng);
    return binomial_btrs(n, p, rng);
}

void sample_multinomial_partition(long long total, std::span<const double> weights,
                                  std::span<long long> out, RngStream& rng) {
    if (weights.size() != out.size()) {
        throw std::invalid_argument("sample_multinomial_partition: size mismatch");
    }
    std::fill(out.begin(), out.end(), 0LL);
    if (total < 0) {
        throw std::invalid_argument("sample_multinomial_partition: total must be >= 0");
    }
    if (total == 0) return;
    const std::size_t k = weights.size();
    // Backward suffix sums avoid cancellation when peeling weights off the front.
    std::vector<double> suffix(k + 1, 0.0);
    for (std::size_t i = k; i-- > 0;) {
        if (weights[i] < 0.0) {
            throw std::invalid_argument("sample_multinomial_partition: negative weight");
        }
        suffix[i] = suffix[i + 1] + weights[i];
    }
    if (suffix[0] <= 0.0) {
        throw std::invalid_argument(
            "sample_multinomial_partition: positive total with all-zero weights");
    }
    long long remaining = total;
    for (std::size_t i = 0; i + 1 < k && remaining > 0; ++i) {
        if (weights[i] == 0.0) continue;
        if (weights[i] >= suffix[i]) {  // all remaining mass sits here
            out[i] = remaining;
            remaining = 0;
            break;
        }
        const long long x = sample_binomial(remaining, weights[i] / suffix[i], rng);
        out[i] = x;
        remaining -= x;
    }
    if (remaining > 0) out[k - 1] += remaining;
}

std::vector<long long> sample_multinomial_partition(long long total,
                                                    std::span<const double> weights,
                                                    RngStream& rng) {
    std::vector<long long> out(weights.size());
    sample_multinomial_partition(total, weights, std::span<long long>(out), rng);
    return out;
}

long long sample_logarithmic(double p, RngStream& rng) {
    if (!(p > 0.0) || !(p < 1.0)) {
        throw std::invalid_argument("sample_logarithmic: p must lie in (0, 1)");
    }
    // Kemp's LK generator (see Devroye, ch. X.5.3).
    const double h = std::log1p(-p);
    const double u1 = rng.next_double_pos();
    if (u1 > p) return 1;
    const double u2 = rng.next_double_pos();
    const double q = -std::expm1(u2 * h);
    if (u1 < q * q) {
        const double v = 1.0 + std::log(u1) / std::log(q);
        // q in (0,1) so log(q) < 0 and v >= 1; clamp against fp edge cases.
        if (v >= 9.2e18) return static_cast<long long>(9.2e18);
        return v < 1.0 ? 1 : static_cast<long long>(v);
    }
    return u1 > q ? 1 : 2;
}

long long sample_sumlog(long long tables, double p, RngStream& rng) {
    if (tables < 1) throw std::invalid_argument("sample_sumlog: tables must be >= 1");
    long long total = 0;
    for (long long i = 0; i < tables; ++i) total += sample_logarithmic(p, rng);
    return total;
}

double sample_gamma_quad(double shape, double linear, double quad, RngStream& rng) {
    if (!(shape > 0.0)) throw std::invalid_argument("sample_gamma_quad: shape must be positive");
    if (quad <= 0.0) return sample_gamma(shape, linear, rng);
    // Envelope Gamma(shape, linear + 2*quad*peak): the ratio to the target is
    // exp(-quad * (x - peak)^2) <= 1, so acceptance is exact.
    const double peak =
        (-linear + std::sqrt(linear * linear + 8.0 * quad * shape)) / (4.0 * quad);
    const double rate = linear + 2.0 * quad * peak;
    for (int it = 0; it < 1'000'000; ++it) {
        const double x = sample_gamma(shape, rate, rng);
        const double d = x - peak;
        if (std::log(rng.next_double_pos()) <= -quad * d * d) return x;
    }
    return peak;  // unreachable in practice
}

}  // namespace sepm
