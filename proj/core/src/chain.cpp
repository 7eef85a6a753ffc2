#include "sepm/chain.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "sepm/distributions.hpp"
#include "sepm/errors.hpp"
#include "sepm/special.hpp"

namespace sepm {

namespace {

std::uint64_t dyad_key(int i, int j) {
    return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint32_t>(j);
}

// Unique per (t, i, j); t < 2^22, vertices < 2^21.
std::uint64_t edge_stream_id(int t, int i, int j) {
    return (static_cast<std::uint64_t>(t) << 42) |
           (static_cast<std::uint64_t>(i) << 21) | static_cast<std::uint64_t>(j);
}

}  // namespace

MaskIndex::MaskIndex(const SnapshotTensor& data, const HoldoutMask* mask) {
    const int T = data.num_steps();
    const int N = data.num_nodes();
    sets_.resize(T);
    partners_.assign(T, std::vector<std::vector<int>>(N));
    if (mask == nullptr) return;
    triples_ = mask->masked;
    for (const auto& [t, i, j] : triples_) {
        if (t < 0 || t >= T || i < 0 || j >= N || i >= j) {
            throw InvariantError("holdout mask triple out of range");
        }
        sets_[t].insert(dyad_key(i, j));
        partners_[t][i].push_back(j);
        partners_[t][j].push_back(i);
    }
    for (auto& per_t : partners_) {
        for (auto& lst : per_t) std::sort(lst.begin(), lst.end());
    }
}

bool MaskIndex::is_masked(int t, int i, int j) const {
    if (sets_.empty()) return false;
    if (i > j) std::swap(i, j);
    return sets_[t].count(dyad_key(i, j)) != 0;
}

void CommunityChain::init(int T, int K, double tau_value) {
    tau = tau_value;
    r.assign(T, K, 1.0);
    rho.assign(T, K, 0.0);
    l.assign(T, K, 0);
    l_split.assign(T, IMat(K, K, 0));
}

void sample_edge_counts(const SnapshotTensor& data, const MaskIndex& mask,
                        const Memberships& memb, const Mat& r, EdgeCounts& counts,
                        std::uint64_t seed, std::uint64_t sweep, int threads) {
    const int T = data.num_steps();
    const int N = memb.num_nodes();
    const int K = memb.num_communities();
    counts.at.resize(T);
    counts.x_agg.assign(T, K, 0);
    counts.vertex_count.assign(N, K, 0);

    const std::uint64_t sweep_seed = mix64(seed ^ mix64(sweep + 0x51ebULL));

    for (int t = 0; t < T; ++t) {
        auto& slice = counts.at[t];
        slice.dyads.clear();
        for (const auto& [i, j] : data.edges(t)) {
            if (!mask.is_masked(t, i, j)) slice.dyads.emplace_back(i, j);
        }
        const std::size_t ne = slice.dyads.size();
        slice.total.assign(ne, 0);
        slice.sub.assign(ne * K, 0);

        auto worker = [&](std::size_t begin, std::size_t end) {
            std::vector<double> w(K);
            for (std::size_t e = begin; e < end; ++e) {
                const auto [i, j] = slice.dyads[e];
                RngStream rng(sweep_seed, edge_stream_id(t, i, j));
                double lambda = 0.0;
                for (int k = 0; k < K; ++k) {
                    w[k] = r(t, k) * memb.phi(i, k) * memb.phi(j, k);
                    lambda += w[k];
                }
                long long* sub = slice.sub.data() + e * K;
                if (lambda <= 0.0) {
                    // degenerate rate: the truncated draw is 1; give it to the
                    // largest weight, breaking ties uniformly
                    slice.total[e] = 1;
                    const double top = *std::max_element(w.begin(), w.end());
                    int ties = 0;
                    for (int k = 0; k < K; ++k) ties += (w[k] == top);
                    auto pick = static_cast<long long>(rng.next_below(ties));
                    for (int k = 0; k < K; ++k) {
                        if (w[k] == top && pick-- == 0) {
                            sub[k] = 1;
                            break;
                        }
                    }
                    continue;
                }
                const long long x = sample_truncated_poisson(lambda, rng);
                slice.total[e] = x;
                if (K == 1) {
                    sub[0] = x;
                } else {
                    sample_multinomial_partition(x, std::span<const double>(w),
                                                 std::span<long long>(sub, K), rng);
                }
            }
        };

        if (threads <= 1 || ne < 512) {
            worker(0, ne);
        } else {
            const int nt = std::min<int>(threads, std::thread::hardware_concurrency());
            std::vector<std::thread> pool;
            const std::size_t chunk = (ne + nt - 1) / nt;
            for (int w = 0; w < nt; ++w) {
                const std::size_t b = w * chunk;
                if (b >= ne) break;
                pool.emplace_back(worker, b, std::min(ne, b + chunk));
            }
            for (auto& th : pool) th.join();
        }

        // Integer reductions: order-independent, so identical for any thread count.
        for (std::size_t e = 0; e < ne; ++e) {
            const auto [i, j] = slice.dyads[e];
            const long long* sub = slice.sub.data() + e * K;
            for (int k = 0; k < K; ++k) {
                counts.x_agg(t, k) += sub[k];
                counts.vertex_count(i, k) += sub[k];
                counts.vertex_count(j, k) += sub[k];
            }
        }
    }
}

GammaParams membership_posterior(const EdgeCounts& counts, const Mat& r,
                                 const Memberships& memb, const MaskIndex& mask,
                                 int i, int k) {
    const int T = static_cast<int>(r.rows());
    const int N = memb.num_nodes();
    double rate = memb.vertex_scale[i];
    for (int t = 0; t < T; ++t) {
        double partner_sum = 0.0;
        for (int j = 0; j < N; ++j) {
            if (j != i) partner_sum += memb.phi(j, k);
        }
        for (int j : mask.partners(t, i)) partner_sum -= memb.phi(j, k);
        rate += r(t, k) * partner_sum;
    }
    return {memb.a0 + static_cast<double>(counts.vertex_count(i, k)), rate};
}

void sample_memberships(const EdgeCounts& counts, const Mat& r, Memberships& memb,
                        const MaskIndex& mask, RngStream& rng) {
    const int N = memb.num_nodes();
    const int K = memb.num_communities();
    const int T = static_cast<int>(r.rows());

    std::vector<double> phi_total(K, 0.0);
    for (int i = 0; i < N; ++i) {
        for (int k = 0; k < K; ++k) phi_total[k] += memb.phi(i, k);
    }
    std::vector<double> r_total(K, 0.0);
    for (int t = 0; t < T; ++t) {
        for (int k = 0; k < K; ++k) r_total[k] += r(t, k);
    }

    std::vector<double> corr(K);
    for (int i = 0; i < N; ++i) {
        std::fill(corr.begin(), corr.end(), 0.0);
        for (int t = 0; t < T; ++t) {
            for (int j : mask.partners(t, i)) {
                for (int k = 0; k < K; ++k) corr[k] += r(t, k) * memb.phi(j, k);
            }
        }
        for (int k = 0; k < K; ++k) {
            const double shape =
                memb.a0 + static_cast<double>(counts.vertex_count(i, k));
            double extra = r_total[k] * (phi_total[k] - memb.phi(i, k)) - corr[k];
            if (extra < 0.0) extra = 0.0;  // round-off when nearly all partners masked
            const double rate = memb.vertex_scale[i] + extra;
            const double fresh = sample_gamma(shape, rate, rng);
            phi_total[k] += fresh - memb.phi(i, k);
            memb.phi(i, k) = fresh;
        }
    }
}

GammaParams vertex_scale_posterior(const Memberships& memb, int i, double f0, double g0) {
    const int K = memb.num_communities();
    double phi_sum = 0.0;
    for (int k = 0; k < K; ++k) phi_sum += memb.phi(i, k);
    return {f0 + static_cast<double>(K) * memb.a0, g0 + phi_sum};
}

void sample_vertex_scales(Memberships& memb, double f0, double g0, RngStream& rng) {
    const int N = memb.num_nodes();
    for (int i = 0; i < N; ++i) {
        const GammaParams p = vertex_scale_posterior(memb, i, f0, g0);
        memb.vertex_scale[i] = sample_gamma(p.shape, p.rate, rng);
    }
}

void aggregate_rates(const Memberships& memb, const MaskIndex& mask, int T,
                     RateAggregates& agg) {
    const int N = memb.num_nodes();
    const int K = memb.num_communities();
    agg.s.assign(T, K, 0.0);

    std::vector<double> total(K, 0.0);
    std::vector<double> sq(K, 0.0);
    for (int i = 0; i < N; ++i) {
        for (int k = 0; k < K; ++k) {
            const double v = memb.phi(i, k);
            total[k] += v;
            sq[k] += v * v;
        }
    }
    for (int t = 0; t < T; ++t) {
        for (int k = 0; k < K; ++k) {
            agg.s(t, k) = 0.5 * (total[k] * total[k] - sq[k]);
        }
    }
    for (const auto& [t, i, j] : mask.triples()) {
        for (int k = 0; k < K; ++k) {
            agg.s(t, k) -= memb.phi(i, k) * memb.phi(j, k);
        }
    }
    // guard tiny negative round-off
    for (auto& v : agg.s) v = std::max(v, 0.0);
}

double excitation(const Mat& pi, const double* r_prev, int k) {
    const int K = static_cast<int>(pi.cols());
    double acc = 0.0;
    for (int k1 = 0; k1 < K; ++k1) acc += pi(k1, k) * r_prev[k1];
    return acc;
}

void backward_pass(const EdgeCounts& counts, CommunityChain& chain, const Mat& pi,
                   std::span<const double> init_shape, const RateAggregates& agg,
                   RngStream& rng) {
    const int T = chain.num_steps();
    const int K = chain.num_communities();
    std::vector<double> weights(K);

    for (int t = T - 1; t >= 0; --t) {
        for (int k = 0; k < K; ++k) {
            const double zeta_next =
                (t == T - 1) ? 0.0 : -std::log1p(-chain.rho(t + 1, k));
            const double a = agg.s(t, k) + zeta_next;
            chain.rho(t, k) = a / (chain.tau + a);

            const long long count =
                counts.x_agg(t, k) + (t + 1 < T ? chain.l(t + 1, k) : 0);
            const double conc =
                (t == 0) ? init_shape[k] : excitation(pi, chain.r.row(t - 1), k);
            chain.l(t, k) = count == 0 ? 0 : sample_crt(count, conc, rng);

            if (t >= 1) {
                for (int k1 = 0; k1 < K; ++k1) {
                    weights[k1] = pi(k1, k) * chain.r(t - 1, k1);
                }
                std::vector<long long> parts(K, 0);
                if (chain.l(t, k) > 0) {
                    sample_multinomial_partition(chain.l(t, k),
                                                 std::span<const double>(weights),
                                                 std::span<long long>(parts), rng);
                }
                for (int k1 = 0; k1 < K; ++k1) chain.l_split[t](k1, k) = parts[k1];
            }
        }
    }
    // t = 0 has no split; keep the slot zeroed for invariant checks
    chain.l_split[0].fill(0);
}

GammaParams forward_posterior(const EdgeCounts& counts, const CommunityChain& chain,
                              const Mat& pi, std::span<const double> init_shape,
                              const RateAggregates& agg, int t, int k) {
    const int T = chain.num_steps();
    double shape = static_cast<double>(counts.x_agg(t, k));
    if (t + 1 < T) shape += static_cast<double>(chain.l(t + 1, k));
    shape += (t == 0) ? init_shape[k] : excitation(pi, chain.r.row(t - 1), k);

    double rate = chain.tau + agg.s(t, k);
    if (t + 1 < T) rate += -std::log1p(-chain.rho(t + 1, k));
    return {shape, rate};
}

void forward_pass(const EdgeCounts& counts, CommunityChain& chain, const Mat& pi,
                  std::span<const double> init_shape, const RateAggregates& agg,
                  RngStream& rng) {
    const int T = chain.num_steps();
    const int K = chain.num_communities();
    for (int t = 0; t < T; ++t) {
        for (int k = 0; k < K; ++k) {
            const GammaParams p = forward_posterior(counts, chain, pi, init_shape, agg, t, k);
            chain.r(t, k) = sample_gamma(p.shape, p.rate, rng);
        }
    }
}

double training_log_likelihood(const SnapshotTensor& data, const MaskIndex& mask,
                               const Memberships& memb, const Mat& r) {
    const int T = data.num_steps();
    const int N = data.num_nodes();
    const int K = memb.num_communities();
    double ll = 0.0;
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < N; ++i) {
            for (int j = i + 1; j < N; ++j) {
                if (mask.is_masked(t, i, j)) continue;
                double rate = 0.0;
                for (int k = 0; k < K; ++k) {
                    rate += r(t, k) * memb.phi(i, k) * memb.phi(j, k);
                }
                if (data.has_edge(t, i, j)) {
                    ll += std::log(clamp_prob(-std::expm1(-rate)));
                } else {
                    ll -= rate;
                }
            }
        }
    }
    return ll;
}

void check_edge_counts(const EdgeCounts& counts, const SnapshotTensor& data,
                       const MaskIndex& mask) {
    const int T = data.num_steps();
    const int K = static_cast<int>(counts.x_agg.cols());
    for (int t = 0; t < T; ++t) {
        const auto& slice = counts.at[t];
        std::size_t expect = 0;
        for (const auto& [i, j] : data.edges(t)) {
            expect += !mask.is_masked(t, i, j);
        }
        if (slice.dyads.size() != expect) {
            throw InvariantError("edge-count support mismatch at t=" + std::to_string(t));
        }
        for (std::size_t e = 0; e < slice.dyads.size(); ++e) {
            if (slice.total[e] < 1) {
                throw InvariantError("latent count below 1 on an observed edge");
            }
            long long sum = 0;
            for (int k = 0; k < K; ++k) sum += slice.sub[e * K + k];
            if (sum != slice.total[e]) {
                throw InvariantError("subcounts do not sum to the edge total");
            }
        }
    }
}

void check_chain(const CommunityChain& chain) {
    const int T = chain.num_steps();
    const int K = chain.num_communities();
    for (int t = 0; t < T; ++t) {
        for (int k = 0; k < K; ++k) {
            const double rho = chain.rho(t, k);
            if (!(rho >= 0.0) || !(rho < 1.0)) {
                throw InvariantError("rho outside [0, 1)");
            }
            if (!(chain.r(t, k) > 0.0)) throw InvariantError("nonpositive community weight");
            if (t >= 1) {
                long long sum = 0;
                for (int k1 = 0; k1 < K; ++k1) sum += chain.l_split[t](k1, k);
                if (sum != chain.l(t, k)) {
                    throw InvariantError("l_split does not sum to l");
                }
            }
        }
    }
}

void check_memberships(const Memberships& memb) {
    for (double v : memb.phi) {
        if (!(v > 0.0)) throw InvariantError("nonpositive membership");
    }
    for (double v : memb.vertex_scale) {
        if (!(v > 0.0)) throw InvariantError("nonpositive vertex scale");
    }
}

void check_transition(const Mat& pi, double tol) {
    const int K = static_cast<int>(pi.cols());
    for (int k = 0; k < K; ++k) {
        double col = 0.0;
        for (int k1 = 0; k1 < K; ++k1) {
            if (pi(k1, k) < 0.0) throw InvariantError("negative transition entry");
            col += pi(k1, k);
        }
        if (std::fabs(col - 1.0) > tol) {
            throw InvariantError("transition column does not sum to 1");
        }
    }
}

}  // namespace sepm
