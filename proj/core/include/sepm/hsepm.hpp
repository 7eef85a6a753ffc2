#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sepm/chain.hpp"
#include "sepm/params.hpp"

namespace sepm {

// Transition-kernel prior of the flat model: Dirichlet concentrations
// nu_k1 * nu_k off the diagonal and xi * nu_k on it.
struct HsepmPrior {
    std::vector<double> nu;    // K, > 0
    double xi = 1.0;
    double beta = 1.0;
    double gamma0 = 1.0;
    std::vector<double> q;     // K column auxiliaries (0 where undefined)
    std::vector<double> zeta;  // -log(1 - q), 0 where the column had no tables
    IMat h;                    // K x K CRT auxiliaries
};

// Column k of the kernel: Dir(nu_1 nu_k + L_1k, ..., xi nu_k + L_kk, ...).
Mat sample_transition_hsepm(const std::vector<double>& nu, double xi, const IMat& L,
                            RngStream& rng);

// Conditional pieces exposed for the substitution tests.
GammaParams hsepm_xi_posterior(const IMat& h, const std::vector<double>& nu,
                               const std::vector<double>& zeta, double f0, double g0);
GammaParams hsepm_nu_posterior(int k, const std::vector<double>& nu, double xi,
                               const IMat& h, const std::vector<double>& zeta,
                               long long l_first, double zeta_rho_first, double tau,
                               double gamma0, double beta);
GammaParams hsepm_beta_posterior(const std::vector<double>& nu, double gamma0,
                                 double f0, double g0);

class HsepmModel {
public:
    HsepmModel(const SnapshotTensor& data, const HoldoutMask* mask,
               const ModelParams& params, std::uint64_t seed);

    // Draws every model parameter from its prior (also the fit initialiser).
    void ancestral_draw(RngStream& rng);
    void init() { ancestral_draw(rng_); }

    // One full Gibbs sweep in partially-collapsed order:
    // counts, phi, c_i, rates, backward, transition layer, beta, forward r.
    void sweep();

    // Bernoulli-Poisson data draw given the current parameters (Geweke).
    SnapshotTensor simulate_data(RngStream& rng) const;
    void rebind_data(const SnapshotTensor& data);

    void check_invariants() const;

    const Memberships& memberships() const { return memb_; }
    const CommunityChain& chain() const { return chain_; }
    const Mat& transition() const { return pi_; }
    const HsepmPrior& prior() const { return prior_; }
    const EdgeCounts& counts() const { return counts_; }
    const RateAggregates& rates() const { return agg_; }
    const ModelParams& params() const { return params_; }
    const SnapshotTensor& data() const { return *data_; }
    std::uint64_t sweeps_done() const { return sweep_; }
    const std::vector<std::string>& block_trace() const { return trace_; }
    double training_ll() const;

private:
    void update_transition_layer();
    std::vector<double> init_shape_vec() const;  // tau * nu

    const SnapshotTensor* data_;
    MaskIndex mask_;
    ModelParams params_;
    std::uint64_t seed_;
    RngStream rng_;
    std::uint64_t sweep_ = 0;

    Memberships memb_;
    CommunityChain chain_;
    Mat pi_;
    HsepmPrior prior_;
    EdgeCounts counts_;
    RateAggregates agg_;
    std::vector<std::string> trace_;
};

}  // namespace sepm
