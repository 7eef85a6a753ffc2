#include "sepm/hsepm.hpp"

#include <cmath>

#include "sepm/distributions.hpp"
#include "sepm/errors.hpp"
#include "sepm/special.hpp"

namespace sepm {

Mat sample_transition_hsepm(const std::vector<double>& nu, double xi, const IMat& L,
                            RngStream& rng) {
    const int K = static_cast<int>(nu.size());
    Mat pi(K, K, 0.0);
    std::vector<double> conc(K);
    std::vector<double> col(K);
    for (int k = 0; k < K; ++k) {
        for (int k1 = 0; k1 < K; ++k1) {
            const double prior = (k1 == k ? xi : nu[k1]) * nu[k];
            conc[k1] = prior + static_cast<double>(L(k1, k));
        }
        sample_dirichlet(conc, std::span<double>(col), rng);
        for (int k1 = 0; k1 < K; ++k1) pi(k1, k) = col[k1];
    }
    return pi;
}

GammaParams hsepm_xi_posterior(const IMat& h, const std::vector<double>& nu,
                               const std::vector<double>& zeta, double f0, double g0) {
    const int K = static_cast<int>(nu.size());
    double shape = f0;
    double rate = g0;
    for (int k = 0; k < K; ++k) {
        shape += static_cast<double>(h(k, k));
        rate += nu[k] * zeta[k];
    }
    return {shape, rate};
}

GammaParams hsepm_nu_posterior(int k, const std::vector<double>& nu, double xi,
                               const IMat& h, const std::vector<double>& zeta,
                               long long l_first, double zeta_rho_first, double tau,
                               double gamma0, double beta) {
    const int K = static_cast<int>(nu.size());
    long long n_k = h(k, k) + l_first;
    double other_nu = 0.0;
    double cross = 0.0;
    for (int k1 = 0; k1 < K; ++k1) {
        if (k1 == k) continue;
        n_k += h(k1, k) + h(k, k1);
        other_nu += nu[k1];
        cross += zeta[k1] * nu[k1];
    }
    const double t_k = zeta[k] * (xi + other_nu) + cross + tau * zeta_rho_first;
    return {gamma0 / static_cast<double>(K) + static_cast<double>(n_k), beta + t_k};
}

GammaParams hsepm_beta_posterior(const std::vector<double>& nu, double gamma0,
                                 double f0, double g0) {
    double total = 0.0;
    for (double v : nu) total += v;
    return {f0 + gamma0, g0 + total};
}

HsepmModel::HsepmModel(const SnapshotTensor& data, const HoldoutMask* mask,
                       const ModelParams& params, std::uint64_t seed)
    : data_(&data),
      mask_(data, mask),
      params_(params),
      seed_(seed),
      rng_(seed, 0) {
    const int N = data.num_nodes();
    const int T = data.num_steps();
    const int K = params_.K;
    if (K < 1) throw ConfigError("hsepm: K must be >= 1");
    memb_.phi.assign(N, K, 1.0);
    memb_.vertex_scale.assign(N, 1.0);
    memb_.a0 = params_.a0;
    chain_.init(T, K, params_.tau);
    pi_.assign(K, K, 1.0 / K);
    prior_.nu.assign(K, 1.0);
    prior_.xi = 1.0;
    prior_.beta = 1.0;
    prior_.gamma0 = params_.gamma0;
    prior_.q.assign(K, 0.0);
    prior_.zeta.assign(K, 0.0);
    prior_.h.assign(K, K, 0);
    agg_.s.assign(T, K, 0.0);
}

std::vector<double> HsepmModel::init_shape_vec() const {
    std::vector<double> shape(prior_.nu.size());
    for (std::size_t k = 0; k < shape.size(); ++k) shape[k] = params_.tau * prior_.nu[k];
    return shape;
}

void HsepmModel::ancestral_draw(RngStream& rng) {
    const int N = data_->num_nodes();
    const int T = data_->num_steps();
    const int K = params_.K;

    prior_.beta = sample_gamma(params_.f0, params_.g0, rng);
    prior_.xi = sample_gamma(params_.f0, params_.g0, rng);
    for (int k = 0; k < K; ++k) {
        prior_.nu[k] = sample_gamma(prior_.gamma0 / K, prior_.beta, rng);
    }
    std::vector<double> conc(K);
    std::vector<double> col(K);
    for (int k = 0; k < K; ++k) {
        for (int k1 = 0; k1 < K; ++k1) {
            conc[k1] = (k1 == k ? prior_.xi : prior_.nu[k1]) * prior_.nu[k];
        }
        sample_dirichlet(conc, std::span<double>(col), rng);
        for (int k1 = 0; k1 < K; ++k1) pi_(k1, k) = col[k1];
    }
    for (int k = 0; k < K; ++k) {
        chain_.r(0, k) = sample_gamma(params_.tau * prior_.nu[k], params_.tau, rng);
    }
    for (int t = 1; t < T; ++t) {
        for (int k = 0; k < K; ++k) {
            chain_.r(t, k) =
                sample_gamma(excitation(pi_, chain_.r.row(t - 1), k), params_.tau, rng);
        }
    }
    for (int i = 0; i < N; ++i) {
        memb_.vertex_scale[i] = sample_gamma(params_.f0, params_.g0, rng);
        for (int k = 0; k < K; ++k) {
            memb_.phi(i, k) = sample_gamma(params_.a0, memb_.vertex_scale[i], rng);
        }
    }
}

SnapshotTensor HsepmModel::simulate_data(RngStream& rng) const {
    const int N = data_->num_nodes();
    const int T = data_->num_steps();
    const int K = params_.K;
    std::vector<std::vector<Dyad>> edges(T);
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < N; ++i) {
            for (int j = i + 1; j < N; ++j) {
                double rate = 0.0;
                for (int k = 0; k < K; ++k) {
                    rate += chain_.r(t, k) * memb_.phi(i, k) * memb_.phi(j, k);
                }
                if (rng.next_double() < -std::expm1(-rate)) edges[t].emplace_back(i, j);
            }
        }
    }
    return SnapshotTensor(N, T, std::move(edges));
}

void HsepmModel::rebind_data(const SnapshotTensor& data) {
    data_ = &data;
    mask_ = MaskIndex(data, nullptr);
}

void HsepmModel::update_transition_layer() {
    const int K = params_.K;
    const int T = chain_.num_steps();

    IMat L(K, K, 0);
    for (int t = 1; t < T; ++t) {
        for (int k = 0; k < K; ++k) {
            for (int k1 = 0; k1 < K; ++k1) L(k1, k) += chain_.l_split[t](k1, k);
        }
    }

    // Column auxiliaries with the kernel marginalised out.
    for (int k = 0; k < K; ++k) {
        long long col_total = 0;
        for (int k1 = 0; k1 < K; ++k1) col_total += L(k1, k);
        if (col_total == 0) {
            prior_.q[k] = 0.0;
            prior_.zeta[k] = 0.0;
            continue;
        }
        double other_nu = 0.0;
        for (int k1 = 0; k1 < K; ++k1) {
            if (k1 != k) other_nu += prior_.nu[k1];
        }
        prior_.q[k] = sample_beta(static_cast<double>(col_total),
                                  prior_.nu[k] * (prior_.xi + other_nu), rng_);
        prior_.zeta[k] = -std::log1p(-prior_.q[k]);
    }
    for (int k = 0; k < K; ++k) {
        for (int k1 = 0; k1 < K; ++k1) {
            const double conc = (k1 == k ? prior_.xi : prior_.nu[k1]) * prior_.nu[k];
            prior_.h(k1, k) = L(k1, k) == 0 ? 0 : sample_crt(L(k1, k), conc, rng_);
        }
    }

    const GammaParams xp =
        hsepm_xi_posterior(prior_.h, prior_.nu, prior_.zeta, params_.f0, params_.g0);
    prior_.xi = sample_gamma(xp.shape, xp.rate, rng_);

    for (int k = 0; k < K; ++k) {
        const double zeta_rho0 = -std::log1p(-chain_.rho(0, k));
        const GammaParams np =
            hsepm_nu_posterior(k, prior_.nu, prior_.xi, prior_.h, prior_.zeta,
                               chain_.l(0, k), zeta_rho0, params_.tau, prior_.gamma0,
                               prior_.beta);
        prior_.nu[k] = sample_gamma(np.shape, np.rate, rng_);
    }

    pi_ = sample_transition_hsepm(prior_.nu, prior_.xi, L, rng_);
}

void HsepmModel::sweep() {
    trace_.clear();
    const std::vector<double> init0 = init_shape_vec();

    sample_edge_counts(*data_, mask_, memb_, chain_.r, counts_, seed_, sweep_,
                       params_.threads);
    trace_.push_back("edge_counts");

    sample_memberships(counts_, chain_.r, memb_, mask_, rng_);
    trace_.push_back("memberships");

    sample_vertex_scales(memb_, params_.f0, params_.g0, rng_);
    trace_.push_back("vertex_scales");

    aggregate_rates(memb_, mask_, chain_.num_steps(), agg_);
    trace_.push_back("rates");

    backward_pass(counts_, chain_, pi_, init0, agg_, rng_);
    trace_.push_back("backward");

    update_transition_layer();
    trace_.push_back("transition");

    const GammaParams bp =
        hsepm_beta_posterior(prior_.nu, prior_.gamma0, params_.f0, params_.g0);
    prior_.beta = sample_gamma(bp.shape, bp.rate, rng_);
    trace_.push_back("beta");

    const std::vector<double> init1 = init_shape_vec();
    forward_pass(counts_, chain_, pi_, init1, agg_, rng_);
    trace_.push_back("forward");

    ++sweep_;
    if (params_.validate) check_invariants();
}

double HsepmModel::training_ll() const {
    return training_log_likelihood(*data_, mask_, memb_, chain_.r);
}

void HsepmModel::check_invariants() const {
    check_edge_counts(counts_, *data_, mask_);
    check_chain(chain_);
    check_memberships(memb_);
    check_transition(pi_);
    for (double v : prior_.nu) {
        if (!(v > 0.0)) throw InvariantError("nonpositive nu");
    }
    if (!(prior_.xi > 0.0)) throw InvariantError("nonpositive xi");
    if (!(prior_.beta > 0.0)) throw InvariantError("nonpositive beta");
}

}  // namespace sepm
