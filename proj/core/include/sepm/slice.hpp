#pragma once

#include <cmath>
#include <limits>

#include "sepm/rng.hpp"

namespace sepm {

// Univariate slice sampler on (0, inf) with stepping-out and shrinkage
// (Neal 2003).  Leaves exp(logf) invariant; used for gamma-shape conditionals
// that have no conjugate form.
template <typename LogF>
double slice_sample(LogF&& logf, double x0, double width, RngStream& rng) {
    const double logy = logf(x0) + std::log(rng.next_double_pos());

    double lo = x0 - width * rng.next_double();
    double hi = lo + width;
    int steps = 256;
    while (lo > 0.0 && steps-- > 0 && logf(lo) > logy) lo -= width;
    if (lo < 0.0) lo = 0.0;
    steps = 256;
    while (steps-- > 0 && logf(hi) > logy) hi += width;

    for (int it = 0; it < 1000; ++it) {
        const double x1 = lo + (hi - lo) * rng.next_double_pos();
        if (logf(x1) >= logy) return x1;
        if (x1 < x0) {
            lo = x1;
        } else {
            hi = x1;
        }
    }
    return x0;  // interval collapsed onto the current point
}

}  // namespace sepm
