#pragma once

#include <cstdint>

namespace sepm {

// Knobs shared by both samplers.  Defaults follow the common setup: every
// gamma hyperprior at 1.0, conjugate shape forms, single-threaded sweeps.
struct ModelParams {
    int K = 10;
    int D = 5;  // ghsepm only
    double tau = 1.0;
    double a0 = 1.0;
    double f0 = 1.0;
    double g0 = 1.0;
    double e0 = 1.0;
    double j0 = 1.0;
    double gamma0 = 1.0;
    bool ck_shape_conjugate = true;  // conjugate (1 + a_k*D) vs legacy (1 + a_k)
    bool freeze_beta = false;        // hold the hierarchy beta fixed at 1.0
    int threads = 1;
    bool validate = false;  // run the invariant suite after every sweep
};

}  // namespace sepm
