#pragma once

#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

#include "sepm/mat.hpp"
#include "sepm/netdata.hpp"
#include "sepm/rng.hpp"

namespace sepm {

// Per-(data, mask) lookup structures shared by the kernels: O(1) masked-cell
// queries, per-(t, vertex) masked-partner lists, and the flat triple list.
class MaskIndex {
public:
    MaskIndex() = default;
    MaskIndex(const SnapshotTensor& data, const HoldoutMask* mask);

    bool is_masked(int t, int i, int j) const;
    const std::vector<int>& partners(int t, int i) const { return partners_[t][i]; }
    const std::vector<std::tuple<int, int, int>>& triples() const { return triples_; }
    bool empty() const { return triples_.empty(); }

private:
    std::vector<std::unordered_set<std::uint64_t>> sets_;
    std::vector<std::vector<std::vector<int>>> partners_;
    std::vector<std::tuple<int, int, int>> triples_;
};

// Static vertex-community memberships phi_ik with per-vertex degree scales.
struct Memberships {
    Mat phi;                           // N x K, strictly positive
    std::vector<double> vertex_scale;  // c_i, strictly positive
    double a0 = 1.0;

    int num_nodes() const { return static_cast<int>(phi.rows()); }
    int num_communities() const { return static_cast<int>(phi.cols()); }
};

// The gamma-Markov chain over community weights plus its augmentation state.
struct CommunityChain {
    Mat r;                    // T x K community weights
    Mat rho;                  // T x K backward propagation scalars, in [0, 1)
    IMat l;                   // T x K auxiliary table counts
    std::vector<IMat> l_split;  // per t >= 1: K x K, (source k1, target k)
    double tau = 1.0;

    int num_steps() const { return static_cast<int>(r.rows()); }
    int num_communities() const { return static_cast<int>(r.cols()); }
    void init(int T, int K, double tau_value);
};

// s_k^(t): sum of phi_ik * phi_jk over unmasked dyads i < j at time t.
struct RateAggregates {
    Mat s;  // T x K
};

// Augmented Poisson counts on unmasked observed edges, with per-community
// subcounts and the aggregates every downstream update consumes.
struct EdgeCounts {
    struct Slice {
        std::vector<Dyad> dyads;
        std::vector<long long> total;
        std::vector<long long> sub;  // dyads.size() * K, row-major per edge
    };
    std::vector<Slice> at;  // size T
    IMat x_agg;             // T x K: x_..k^(t)
    IMat vertex_count;      // N x K: sum over incident edges and times
};

struct GammaParams {
    double shape = 0.0;
    double rate = 0.0;
};

// --- kernels ------------------------------------------------------------

// Draw x and its community split for every unmasked observed edge.  Each edge
// uses its own RNG substream keyed by (t, i, j, sweep) so the block is
// thread-count invariant.
void sample_edge_counts(const SnapshotTensor& data, const MaskIndex& mask,
                        const Memberships& memb, const Mat& r, EdgeCounts& counts,
                        std::uint64_t seed, std::uint64_t sweep, int threads);

// Conditional for phi_ik under the current state (exposed for tests).
GammaParams membership_posterior(const EdgeCounts& counts, const Mat& r,
                                 const Memberships& memb, const MaskIndex& mask,
                                 int i, int k);

// Sequential vertex sweep in ascending index order, rate sums maintained
// incrementally.
void sample_memberships(const EdgeCounts& counts, const Mat& r, Memberships& memb,
                        const MaskIndex& mask, RngStream& rng);

GammaParams vertex_scale_posterior(const Memberships& memb, int i, double f0, double g0);
void sample_vertex_scales(Memberships& memb, double f0, double g0, RngStream& rng);

void aggregate_rates(const Memberships& memb, const MaskIndex& mask, int T,
                     RateAggregates& agg);

// sum_k1 pi(k1, k) * r_prev[k1]: how much past weight feeds community k.
double excitation(const Mat& pi, const double* r_prev, int k);

// Backward sweep t = T..1: rho recursion, CRT table counts, and the
// source-community split of each count.
void backward_pass(const EdgeCounts& counts, CommunityChain& chain, const Mat& pi,
                   std::span<const double> init_shape, const RateAggregates& agg,
                   RngStream& rng);

// Conditional for r_k^(t) given the augmentation (exposed for tests).
GammaParams forward_posterior(const EdgeCounts& counts, const CommunityChain& chain,
                              const Mat& pi, std::span<const double> init_shape,
                              const RateAggregates& agg, int t, int k);

// Forward sweep t = 1..T redrawing the community weights.
void forward_pass(const EdgeCounts& counts, CommunityChain& chain, const Mat& pi,
                  std::span<const double> init_shape, const RateAggregates& agg,
                  RngStream& rng);

// Bernoulli-Poisson log likelihood of the unmasked entries (trace diagnostic).
double training_log_likelihood(const SnapshotTensor& data, const MaskIndex& mask,
                               const Memberships& memb, const Mat& r);

// --- invariant checks (throw InvariantError) -----------------------------

void check_edge_counts(const EdgeCounts& counts, const SnapshotTensor& data,
                       const MaskIndex& mask);
void check_chain(const CommunityChain& chain);
void check_memberships(const Memberships& memb);
void check_transition(const Mat& pi, double tol = 1e-12);

}  // namespace sepm
