#include "sepm/ghsepm.hpp"

#include <cmath>

#include "sepm/distributions.hpp"
#include "sepm/errors.hpp"
#include "sepm/slice.hpp"
#include "sepm/special.hpp"

namespace sepm {

Mat sample_transition_ghsepm(const Mat& alpha, const IMat& L, RngStream& rng,
                             long long* dead_columns) {
    const int K = static_cast<int>(alpha.cols());
    Mat pi(K, K, 0.0);
    std::vector<double> conc(K);
    std::vector<double> col(K);
    for (int k = 0; k < K; ++k) {
        double total = 0.0;
        for (int k1 = 0; k1 < K; ++k1) {
            conc[k1] = alpha(k1, k) + static_cast<double>(L(k1, k));
            total += conc[k1];
        }
        if (total <= 0.0) {
            // no prior mass and no counts anywhere in this column
            std::fill(conc.begin(), conc.end(), 1e-3);
            if (dead_columns != nullptr) ++*dead_columns;
        }
        sample_dirichlet(conc, std::span<double>(col), rng);
        for (int k1 = 0; k1 < K; ++k1) pi(k1, k) = col[k1];
    }
    return pi;
}

double graph_link_posterior(double prior_rate, double weight, double zeta,
                            long long h) {
    if (h > 0) return 1.0;  // Pois(0) cannot emit tables
    const double p1 = -std::expm1(-prior_rate);
    const double num = p1 * std::exp(-weight * zeta);
    const double den = num + (1.0 - p1);
    return den > 0.0 ? num / den : 0.0;
}

GammaParams graph_weight_posterior(double e0, long long h, long long z, double zeta) {
    return {e0 + static_cast<double>(h),
            e0 + static_cast<double>(z) * zeta};
}

GhsepmModel::GhsepmModel(const SnapshotTensor& data, const HoldoutMask* mask,
                         const ModelParams& params, std::uint64_t seed)
    : data_(&data),
      mask_(data, mask),
      params_(params),
      seed_(seed),
      rng_(seed, 0) {
    const int N = data.num_nodes();
    const int T = data.num_steps();
    const int K = params_.K;
    const int D = params_.D;
    if (K < 1) throw ConfigError("ghsepm: K must be >= 1");
    if (D < 1) throw ConfigError("ghsepm: D must be >= 1");

    memb_.phi.assign(N, K, 1.0);
    memb_.vertex_scale.assign(N, 1.0);
    memb_.a0 = params_.a0;
    chain_.init(T, K, params_.tau);
    pi_.assign(K, K, 1.0 / K);

    graph_.e0 = params_.e0;
    graph_.z.assign(K, K, 1);  // fully connected start: mass can move anywhere
    graph_.w.assign(K, K, 1.0);
    graph_.alpha.assign(K, K, 1.0);
    graph_.q.assign(K, 0.0);
    graph_.zeta.assign(K, 0.0);
    graph_.h.assign(K, K, 0);

    hier_.omega.assign(K, K, 0);
    hier_.agg_first.assign(K, D, 0);
    hier_.agg_second.assign(K, D, 0);
    hier_.agg_cell.assign(D, D, 0);
    hier_.m.assign(K, D, 1.0);
    hier_.a_k.assign(K, 1.0);
    hier_.c_k.assign(K, 1.0);
    hier_.v.assign(D, D, 1.0);
    hier_.lambda.assign(D, 1.0);
    hier_.l_cell.assign(D, D, 0);
    hier_.beta = 1.0;

    agg_.s.assign(T, K, 0.0);
}

std::vector<double> GhsepmModel::init_shape_vec() const {
    return std::vector<double>(params_.K, 1.0 / static_cast<double>(params_.K));
}

double GhsepmModel::pair_rate(int k1, int k2) const {
    const int D = params_.D;
    double rate = 0.0;
    for (int d1 = 0; d1 < D; ++d1) {
        double inner = 0.0;
        for (int d2 = 0; d2 < D; ++d2) inner += hier_.v(d1, d2) * hier_.m(k2, d2);
        rate += hier_.m(k1, d1) * inner;
    }
    return rate;
}

void GhsepmModel::ancestral_draw(RngStream& rng) {
    const int N = data_->num_nodes();
    const int T = data_->num_steps();
    const int K = params_.K;
    const int D = params_.D;

    hier_.beta = params_.freeze_beta ? 1.0 : sample_gamma(params_.f0, params_.g0, rng);
    hier_.gamma1 = sample_gamma(1.0, 1.0, rng);
    hier_.c0 = sample_gamma(1.0, 1.0, rng);
    hier_.xi = sample_gamma(params_.e0, params_.j0, rng);
    for (int d = 0; d < D; ++d) {
        hier_.lambda[d] = sample_gamma(hier_.gamma1 / D, hier_.c0, rng);
    }
    for (int d1 = 0; d1 < D; ++d1) {
        for (int d2 = 0; d2 < D; ++d2) {
            const double shape = d1 == d2 ? hier_.lambda[d1] * hier_.xi
                                          : hier_.lambda[d1] * hier_.lambda[d2];
            hier_.v(d1, d2) = sample_gamma(shape, hier_.beta, rng);
        }
    }
    for (int k = 0; k < K; ++k) {
        hier_.a_k[k] = sample_gamma(params_.e0, params_.j0, rng);
        hier_.c_k[k] = sample_gamma(1.0, 1.0, rng);
        for (int d = 0; d < D; ++d) {
            hier_.m(k, d) = sample_gamma(hier_.a_k[k], hier_.c_k[k], rng);
        }
    }
    for (int k1 = 0; k1 < K; ++k1) {
        for (int k2 = 0; k2 < K; ++k2) {
            hier_.omega(k1, k2) = sample_poisson(pair_rate(k1, k2), rng);
            graph_.z(k1, k2) = hier_.omega(k1, k2) >= 1 ? 1 : 0;
            graph_.w(k1, k2) = sample_gamma(graph_.e0, graph_.e0, rng);
            graph_.alpha(k1, k2) = graph_.z(k1, k2) * graph_.w(k1, k2);
        }
    }
    {
        IMat zero(K, K, 0);
        pi_ = sample_transition_ghsepm(graph_.alpha, zero, rng, nullptr);
    }
    for (int k = 0; k < K; ++k) {
        chain_.r(0, k) = sample_gamma(1.0 / K, params_.tau, rng);
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

SnapshotTensor GhsepmModel::simulate_data(RngStream& rng) const {
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

void GhsepmModel::rebind_data(const SnapshotTensor& data) {
    data_ = &data;
    mask_ = MaskIndex(data, nullptr);
}

void GhsepmModel::update_transition_layer() {
    const int K = params_.K;
    const int T = chain_.num_steps();

    IMat L(K, K, 0);
    for (int t = 1; t < T; ++t) {
        for (int k = 0; k < K; ++k) {
            for (int k1 = 0; k1 < K; ++k1) L(k1, k) += chain_.l_split[t](k1, k);
        }
    }

    for (int k = 0; k < K; ++k) {
        long long col_total = 0;
        double alpha_col = 0.0;
        for (int k1 = 0; k1 < K; ++k1) {
            col_total += L(k1, k);
            alpha_col += graph_.alpha(k1, k);
        }
        if (col_total == 0) {
            graph_.q[k] = 0.0;
            graph_.zeta[k] = 0.0;
        } else if (alpha_col <= 0.0) {
            // counts landed in a column whose prior mass vanished; the beta
            // conditional degenerates at 1
            graph_.q[k] = clamp_prob(1.0);
            graph_.zeta[k] = -std::log1p(-graph_.q[k]);
        } else {
            graph_.q[k] = sample_beta(static_cast<double>(col_total), alpha_col, rng_);
            graph_.zeta[k] = -std::log1p(-graph_.q[k]);
        }
    }

    for (int k2 = 0; k2 < K; ++k2) {
        for (int k1 = 0; k1 < K; ++k1) {
            const long long cnt = L(k1, k2);
            const double conc = graph_.alpha(k1, k2);
            if (cnt == 0) {
                graph_.h(k1, k2) = 0;
            } else if (conc > 0.0) {
                graph_.h(k1, k2) = sample_crt(cnt, conc, rng_);
            } else {
                graph_.h(k1, k2) = 1;  // CRT limit as the concentration vanishes
            }
        }
    }

    for (int k1 = 0; k1 < K; ++k1) {
        for (int k2 = 0; k2 < K; ++k2) {
            const double p = graph_link_posterior(pair_rate(k1, k2), graph_.w(k1, k2),
                                                  graph_.zeta[k2], graph_.h(k1, k2));
            graph_.z(k1, k2) = rng_.next_double() < p ? 1 : 0;
            const GammaParams wp = graph_weight_posterior(
                graph_.e0, graph_.h(k1, k2), graph_.z(k1, k2), graph_.zeta[k2]);
            graph_.w(k1, k2) = sample_gamma(wp.shape, wp.rate, rng_);
            graph_.alpha(k1, k2) = graph_.z(k1, k2) * graph_.w(k1, k2);
        }
    }

    pi_ = sample_transition_ghsepm(graph_.alpha, L, rng_, &dead_columns_);
}

void GhsepmModel::sample_hierarchy_counts() {
    const int K = params_.K;
    const int D = params_.D;
    hier_.agg_first.fill(0);
    hier_.agg_second.fill(0);
    hier_.agg_cell.fill(0);
    hier_.cell_pair_totals.clear();

    std::vector<double> w(static_cast<std::size_t>(D) * D);
    std::vector<long long> cells(static_cast<std::size_t>(D) * D);
    for (int k1 = 0; k1 < K; ++k1) {
        for (int k2 = 0; k2 < K; ++k2) {
            if (graph_.z(k1, k2) == 0) {
                hier_.omega(k1, k2) = 0;
                continue;
            }
            double total = 0.0;
            for (int d1 = 0; d1 < D; ++d1) {
                for (int d2 = 0; d2 < D; ++d2) {
                    const double ww = hier_.m(k1, d1) * hier_.v(d1, d2) * hier_.m(k2, d2);
                    w[d1 * D + d2] = ww;
                    total += ww;
                }
            }
            long long omega;
            if (total <= 0.0) {
                omega = 1;  // truncated draw at vanishing rate
                std::fill(cells.begin(), cells.end(), 0LL);
                cells[rng_.next_below(static_cast<std::uint64_t>(D) * D)] = 1;
            } else {
                omega = sample_truncated_poisson(total, rng_);
                sample_multinomial_partition(omega, std::span<const double>(w),
                                             std::span<long long>(cells), rng_);
            }
            hier_.omega(k1, k2) = omega;
            long long check = 0;
            for (int d1 = 0; d1 < D; ++d1) {
                for (int d2 = 0; d2 < D; ++d2) {
                    const long long c = cells[d1 * D + d2];
                    hier_.agg_first(k1, d1) += c;
                    hier_.agg_second(k2, d2) += c;
                    hier_.agg_cell(d1, d2) += c;
                    check += c;
                }
            }
            if (params_.validate) {
                if (check != omega) throw InvariantError("omega subcounts do not sum");
                hier_.cell_pair_totals.emplace_back(k1, k2, check);
            }
        }
    }
}

void GhsepmModel::sample_hier_memberships() {
    const int K = params_.K;
    const int D = params_.D;

    std::vector<double> m_total(D, 0.0);  // column sums of m, kept current
    for (int k = 0; k < K; ++k) {
        for (int d = 0; d < D; ++d) m_total[d] += hier_.m(k, d);
    }

    // m_kd | rest: evidence from both pair positions; the (k,k) diagonal pair
    // contributes the quadratic cell v_dd * m_kd^2.
    for (int k = 0; k < K; ++k) {
        for (int d = 0; d < D; ++d) {
            const double shape =
                hier_.a_k[k] + static_cast<double>(hier_.agg_first(k, d) +
                                                   hier_.agg_second(k, d));
            double linear = hier_.c_k[k];
            for (int d2 = 0; d2 < D; ++d2) {
                linear += (hier_.v(d, d2) + hier_.v(d2, d)) * m_total[d2];
            }
            linear -= 2.0 * hier_.v(d, d) * hier_.m(k, d);
            if (linear < 1e-12) linear = 1e-12;
            const double quad = hier_.v(d, d);
            const double fresh = sample_gamma_quad(shape, linear, quad, rng_);
            m_total[d] += fresh - hier_.m(k, d);
            hier_.m(k, d) = fresh;
        }
    }

    // a_k | m: gamma-shape conditional, no conjugate form; exact slice update.
    for (int k = 0; k < K; ++k) {
        double log_m = 0.0;
        for (int d = 0; d < D; ++d) log_m += std::log(hier_.m(k, d));
        const double e0 = params_.e0;
        const double j0 = params_.j0;
        const double ck = hier_.c_k[k];
        const double dd = static_cast<double>(D);
        auto logf = [&](double a) {
            if (a <= 0.0) return -std::numeric_limits<double>::infinity();
            return (e0 - 1.0) * std::log(a) - j0 * a + a * dd * std::log(ck) +
                   a * log_m - dd * std::lgamma(a);
        };
        hier_.a_k[k] = slice_sample(logf, hier_.a_k[k],
                                    std::max(1.0, hier_.a_k[k]), rng_);
    }

    for (int k = 0; k < K; ++k) {
        double m_sum = 0.0;
        for (int d = 0; d < D; ++d) m_sum += hier_.m(k, d);
        const double shape = params_.ck_shape_conjugate
                                 ? 1.0 + hier_.a_k[k] * static_cast<double>(D)
                                 : 1.0 + hier_.a_k[k];
        hier_.c_k[k] = sample_gamma(shape, 1.0 + m_sum, rng_);
    }
}

void GhsepmModel::sample_hier_core() {
    const int D = params_.D;
    const int K = params_.K;

    std::vector<double> m_total(D, 0.0);
    for (int k = 0; k < K; ++k) {
        for (int d = 0; d < D; ++d) m_total[d] += hier_.m(k, d);
    }
    // theta_d1d2 = sum over ordered pairs of m_k1d1 m_k2d2 = M_d1 * M_d2
    Mat log_theta_beta(D, D, 0.0);  // log(1 + theta/beta)
    for (int d1 = 0; d1 < D; ++d1) {
        for (int d2 = 0; d2 < D; ++d2) {
            log_theta_beta(d1, d2) = std::log1p(m_total[d1] * m_total[d2] / hier_.beta);
        }
    }

    // CRT auxiliaries with v marginalised; v itself is redrawn afterwards.
    for (int d1 = 0; d1 < D; ++d1) {
        for (int d2 = 0; d2 < D; ++d2) {
            const double shape = d1 == d2 ? hier_.lambda[d1] * hier_.xi
                                          : hier_.lambda[d1] * hier_.lambda[d2];
            const long long cnt = hier_.agg_cell(d1, d2);
            hier_.l_cell(d1, d2) = cnt == 0 ? 0 : sample_crt(cnt, shape, rng_);
        }
    }

    // lambda_d | l: evidence from row d and column d; the diagonal shape is
    // lambda_d * xi, so every term stays linear in lambda_d.
    for (int d = 0; d < D; ++d) {
        double shape = hier_.gamma1 / static_cast<double>(D);
        double rate = hier_.c0;
        shape += static_cast<double>(hier_.l_cell(d, d));
        rate += hier_.xi * log_theta_beta(d, d);
        for (int d2 = 0; d2 < D; ++d2) {
            if (d2 == d) continue;
            shape += static_cast<double>(hier_.l_cell(d, d2) + hier_.l_cell(d2, d));
            rate += hier_.lambda[d2] * (log_theta_beta(d, d2) + log_theta_beta(d2, d));
        }
        hier_.lambda[d] = sample_gamma(shape, rate, rng_);
    }

    {
        double shape = params_.e0;
        double rate = params_.j0;
        for (int d = 0; d < D; ++d) {
            shape += static_cast<double>(hier_.l_cell(d, d));
            rate += hier_.lambda[d] * log_theta_beta(d, d);
        }
        hier_.xi = sample_gamma(shape, rate, rng_);
    }

    for (int d1 = 0; d1 < D; ++d1) {
        for (int d2 = 0; d2 < D; ++d2) {
            const double shape = d1 == d2 ? hier_.lambda[d1] * hier_.xi
                                          : hier_.lambda[d1] * hier_.lambda[d2];
            const double theta = m_total[d1] * m_total[d2];
            hier_.v(d1, d2) = sample_gamma(
                shape + static_cast<double>(hier_.agg_cell(d1, d2)),
                hier_.beta + theta, rng_);
        }
    }
}

void GhsepmModel::sample_hier_hypers() {
    const int D = params_.D;

    {
        double log_lambda = 0.0;
        for (int d = 0; d < D; ++d) log_lambda += std::log(hier_.lambda[d]);
        const double c0 = hier_.c0;
        const double dd = static_cast<double>(D);
        auto logf = [&](double g) {
            if (g <= 0.0) return -std::numeric_limits<double>::infinity();
            return -g + g * std::log(c0) + (g / dd) * log_lambda -
                   dd * std::lgamma(g / dd);
        };
        hier_.gamma1 = slice_sample(logf, hier_.gamma1,
                                    std::max(1.0, hier_.gamma1), rng_);
    }

    {
        double lambda_sum = 0.0;
        for (int d = 0; d < D; ++d) lambda_sum += hier_.lambda[d];
        const double shape = params_.ck_shape_conjugate
                                 ? 1.0 + hier_.gamma1
                                 : 1.0 + hier_.gamma1 / static_cast<double>(D);
        hier_.c0 = sample_gamma(shape, 1.0 + lambda_sum, rng_);
    }

    if (!params_.freeze_beta) {
        double shape = params_.f0;
        double rate = params_.g0;
        for (int d1 = 0; d1 < D; ++d1) {
            for (int d2 = 0; d2 < D; ++d2) {
                shape += d1 == d2 ? hier_.lambda[d1] * hier_.xi
                                  : hier_.lambda[d1] * hier_.lambda[d2];
                rate += hier_.v(d1, d2);
            }
        }
        hier_.beta = sample_gamma(shape, rate, rng_);
    }
}

void GhsepmModel::sweep() {
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

    sample_hierarchy_counts();
    sample_hier_memberships();
    sample_hier_core();
    sample_hier_hypers();
    trace_.push_back("hierarchy");

    forward_pass(counts_, chain_, pi_, init0, agg_, rng_);
    trace_.push_back("forward");

    ++sweep_;
    if (params_.validate) check_invariants();
}

double GhsepmModel::training_ll() const {
    return training_log_likelihood(*data_, mask_, memb_, chain_.r);
}

void GhsepmModel::check_invariants() const {
    const int K = params_.K;
    const int D = params_.D;
    check_edge_counts(counts_, *data_, mask_);
    check_chain(chain_);
    check_memberships(memb_);
    check_transition(pi_);

    for (int k1 = 0; k1 < K; ++k1) {
        for (int k2 = 0; k2 < K; ++k2) {
            const long long z = graph_.z(k1, k2);
            if (z != 0 && z != 1) throw InvariantError("z not binary");
            if (graph_.alpha(k1, k2) != z * graph_.w(k1, k2)) {
                throw InvariantError("alpha != z .* w");
            }
            if (!(graph_.w(k1, k2) > 0.0)) throw InvariantError("nonpositive w");
            if (z == 1 && hier_.omega(k1, k2) < 1) {
                throw InvariantError("z = 1 without a positive omega");
            }
            if (z == 0 && hier_.omega(k1, k2) != 0) {
                throw InvariantError("z = 0 with a positive omega");
            }
        }
    }
    for (const auto& [k1, k2, total] : hier_.cell_pair_totals) {
        if (total != hier_.omega(k1, k2)) {
            throw InvariantError("omega subcount conservation violated");
        }
    }
    long long first = 0;
    long long second = 0;
    long long cell = 0;
    long long omega_total = 0;
    for (int k = 0; k < K; ++k) {
        for (int d = 0; d < D; ++d) {
            first += hier_.agg_first(k, d);
            second += hier_.agg_second(k, d);
        }
    }
    for (int d1 = 0; d1 < D; ++d1) {
        for (int d2 = 0; d2 < D; ++d2) cell += hier_.agg_cell(d1, d2);
    }
    for (int k1 = 0; k1 < K; ++k1) {
        for (int k2 = 0; k2 < K; ++k2) omega_total += hier_.omega(k1, k2);
    }
    if (first != omega_total || second != omega_total || cell != omega_total) {
        throw InvariantError("omega aggregate totals disagree");
    }

    for (double x : hier_.m) {
        if (!(x > 0.0)) throw InvariantError("nonpositive m");
    }
    for (double x : hier_.v) {
        if (!(x > 0.0)) throw InvariantError("nonpositive v");
    }
    for (double x : hier_.lambda) {
        if (!(x > 0.0)) throw InvariantError("nonpositive lambda");
    }
    for (int k = 0; k < K; ++k) {
        if (!(hier_.a_k[k] > 0.0) || !(hier_.c_k[k] > 0.0)) {
            throw InvariantError("nonpositive hierarchy scale");
        }
    }
    if (!(hier_.xi > 0.0) || !(hier_.gamma1 > 0.0) || !(hier_.c0 > 0.0) ||
        !(hier_.beta > 0.0)) {
        throw InvariantError("nonpositive hierarchy hyperparameter");
    }
}

}  // namespace sepm
