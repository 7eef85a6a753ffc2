#pragma once

namespace sepm {

// psi(x), the logarithmic derivative of the gamma function.  x > 0.
double digamma(double x);

// psi'(x), the first derivative of digamma.  x > 0.
double trigamma(double x);

// Clamp a probability into [1e-15, 1 - 1e-15] so that log(p) and log1p(-p)
// stay finite everywhere in the sweeps.
double clamp_prob(double p);

}  // namespace sepm
