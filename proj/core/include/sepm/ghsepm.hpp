#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sepm/chain.hpp"
#include "sepm/params.hpp"

namespace sepm {

// Graph-structured Dirichlet concentrations alpha = z .* w over ordered
// community pairs, with the beta/CRT auxiliaries of each kernel column.
struct GraphPrior {
    IMat z;                    // K x K in {0, 1}
    Mat w;                     // K x K, > 0
    Mat alpha;                 // z .* w, exact
    std::vector<double> q;     // per-column auxiliaries
    std::vector<double> zeta;  // -log(1 - q_k); 0 where the column had no tables
    IMat h;                    // K x K CRT auxiliaries
    double e0 = 1.0;
};

// Second layer: community-to-hierarchical-community memberships and the
// hierarchical core, plus the latent counts that couple them to z.
struct HierarchyState {
    IMat omega;       // K x K, >= 1 exactly where z = 1
    IMat agg_first;   // K x D: subcounts with (k, d) in first position
    IMat agg_second;  // K x D: subcounts with (k, d) in second position
    IMat agg_cell;    // D x D: subcounts per (d1, d2) cell
    Mat m;            // K x D
    std::vector<double> a_k;  // K
    std::vector<double> c_k;  // K
    Mat v;            // D x D
    std::vector<double> lambda;  // D
    IMat l_cell;      // D x D CRT auxiliaries for the v layer
    double xi = 1.0;
    double gamma1 = 1.0;
    double c0 = 1.0;
    double beta = 1.0;

    // populated only when validation is on (unit tests, invariant sweeps)
    std::vector<std::tuple<int, int, long long>> cell_pair_totals;
};

// Column k of the kernel: Dir(alpha_1k + L_1k, ..., alpha_Kk + L_Kk); a column
// with no prior mass and no counts falls back to Dir(1e-3) and is counted.
Mat sample_transition_ghsepm(const Mat& alpha, const IMat& L, RngStream& rng,
                             long long* dead_columns = nullptr);

// Two-term Bayes posterior for one link indicator given its CRT count.
double graph_link_posterior(double prior_rate, double weight, double zeta,
                            long long h);

GammaParams graph_weight_posterior(double e0, long long h, long long z, double zeta);

class GhsepmModel {
public:
    GhsepmModel(const SnapshotTensor& data, const HoldoutMask* mask,
                const ModelParams& params, std::uint64_t seed);

    void ancestral_draw(RngStream& rng);
    void init() { ancestral_draw(rng_); }

    // Full sweep: counts, phi, c_i, rates, backward, transition graph layer,
    // hierarchy layer, forward r.
    void sweep();

    SnapshotTensor simulate_data(RngStream& rng) const;
    void rebind_data(const SnapshotTensor& data);

    void check_invariants() const;

    const Memberships& memberships() const { return memb_; }
    const CommunityChain& chain() const { return chain_; }
    const Mat& transition() const { return pi_; }
    const GraphPrior& graph() const { return graph_; }
    const HierarchyState& hierarchy() const { return hier_; }
    const EdgeCounts& counts() const { return counts_; }
    const RateAggregates& rates() const { return agg_; }
    const ModelParams& params() const { return params_; }
    const SnapshotTensor& data() const { return *data_; }
    std::uint64_t sweeps_done() const { return sweep_; }
    long long dead_columns() const { return dead_columns_; }
    const std::vector<std::string>& block_trace() const { return trace_; }
    double training_ll() const;

private:
    void update_transition_layer();
    void sample_hierarchy_counts();
    void sample_hier_memberships();
    void sample_hier_core();
    void sample_hier_hypers();
    std::vector<double> init_shape_vec() const;  // 1/K
    double pair_rate(int k1, int k2) const;      // m_k1' V m_k2

    const SnapshotTensor* data_;
    MaskIndex mask_;
    ModelParams params_;
    std::uint64_t seed_;
    RngStream rng_;
    std::uint64_t sweep_ = 0;
    long long dead_columns_ = 0;

    Memberships memb_;
    CommunityChain chain_;
    Mat pi_;
    GraphPrior graph_;
    HierarchyState hier_;
    EdgeCounts counts_;
    RateAggregates agg_;
    std::vector<std::string> trace_;
};

}  // namespace sepm
