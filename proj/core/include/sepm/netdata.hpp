#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sepm/rng.hpp"

namespace sepm {

using Dyad = std::pair<int, int>;  // always stored with first < second

// A sequence of T binary symmetric N x N snapshots, stored as per-time sorted
// dyad lists plus a hash index for O(1) membership queries.  Immutable after
// construction.
class SnapshotTensor {
public:
    SnapshotTensor(int num_nodes, int num_steps,
                   std::vector<std::vector<Dyad>> edges_by_time);

    int num_nodes() const { return num_nodes_; }
    int num_steps() const { return num_steps_; }

    bool has_edge(int t, int i, int j) const;
    const std::vector<Dyad>& edges(int t) const { return edges_[t]; }
    long long num_edges() const { return num_edges_; }
    long long dyads_per_step() const {
        return static_cast<long long>(num_nodes_) * (num_nodes_ - 1) / 2;
    }

private:
    int num_nodes_;
    int num_steps_;
    long long num_edges_ = 0;
    std::vector<std::vector<Dyad>> edges_;
    std::vector<std::unordered_set<std::uint64_t>> index_;
};

// Dyad-time entries hidden from training.
struct HoldoutMask {
    std::vector<std::tuple<int, int, int>> masked;  // (t, i, j), i < j, sorted
    double fraction = 0.0;

    bool contains(int t, int i, int j) const;
    // built lazily by contains(); explicit here so samplers can prebuild
    void build_index() const;

private:
    mutable std::vector<std::unordered_set<std::uint64_t>> index_;
    mutable bool built_ = false;
};

// Edge-list file I/O.  Format: optional '#' comment lines, an optional header
// `% nodes=<N> timesteps=<T>`, then `t i j` rows of 0-based integers.
SnapshotTensor load_edge_list(const std::string& path);
void save_edge_list(const SnapshotTensor& data, const std::string& path);

// Uniformly random dyad-time holdout over the full (t, i<j) grid.
HoldoutMask make_holdout(const SnapshotTensor& data, double fraction, RngStream& rng);

// Planted-block generator for the synthetic benchmark network.
struct SyntheticSpec {
    int num_nodes = 60;
    int num_steps = 6;
    std::vector<int> block_sizes = {20, 10, 10, 10, 10};
    double intra_prob = 0.8;
    double inter_prob = 0.05;
    std::pair<int, int> merge_pair = {0, 1};
    std::vector<int> merge_steps = {1, 3, 5};
    std::uint64_t seed = 1;

    void validate() const;  // throws ConfigError on inconsistency
    int block_of(int vertex) const;
};

SnapshotTensor generate_synthetic(const SyntheticSpec& spec, RngStream& rng);

}  // namespace sepm
