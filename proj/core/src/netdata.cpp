#include "sepm/netdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "sepm/errors.hpp"

namespace sepm {

namespace {

std::uint64_t dyad_key(int i, int j) {
    return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint32_t>(j);
}

}  // namespace

SnapshotTensor::SnapshotTensor(int num_nodes, int num_steps,
                               std::vector<std::vector<Dyad>> edges_by_time)
    : num_nodes_(num_nodes), num_steps_(num_steps), edges_(std::move(edges_by_time)) {
    if (num_nodes_ < 1 || num_steps_ < 1) {
        throw ConfigError("SnapshotTensor: need at least one node and one step");
    }
    edges_.resize(num_steps_);
    index_.resize(num_steps_);
    for (int t = 0; t < num_steps_; ++t) {
        for (auto& [i, j] : edges_[t]) {
            if (i == j) throw ConfigError("SnapshotTensor: self-loop rejected");
            if (i > j) std::swap(i, j);
            if (i < 0 || j >= num_nodes_) throw ConfigError("SnapshotTensor: vertex out of range");
        }
        std::sort(edges_[t].begin(), edges_[t].end());
        edges_[t].erase(std::unique(edges_[t].begin(), edges_[t].end()), edges_[t].end());
        index_[t].reserve(edges_[t].size() * 2);
        for (const auto& [i, j] : edges_[t]) index_[t].insert(dyad_key(i, j));
        num_edges_ += static_cast<long long>(edges_[t].size());
    }
}

bool SnapshotTensor::has_edge(int t, int i, int j) const {
    if (i > j) std::swap(i, j);
    return index_[t].count(dyad_key(i, j)) != 0;
}

bool HoldoutMask::contains(int t, int i, int j) const {
    if (!built_) build_index();
    if (i > j) std::swap(i, j);
    if (t >= static_cast<int>(index_.size())) return false;
    return index_[t].count(dyad_key(i, j)) != 0;
}

void HoldoutMask::build_index() const {
    int max_t = -1;
    for (const auto& [t, i, j] : masked) max_t = std::max(max_t, t);
    index_.assign(max_t + 1, {});
    for (const auto& [t, i, j] : masked) index_[t].insert(dyad_key(i, j));
    built_ = true;
}

SnapshotTensor load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open edge list: " + path);

    long long declared_n = -1;
    long long declared_t = -1;
    struct Row {
        long long t, i, j;
    };
    std::vector<Row> rows;
    std::string line;
    long long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos) continue;
        if (line[pos] == '#') continue;
        if (line[pos] == '%') {
            std::string header = line.substr(pos + 1);
            std::size_t np = header.find("nodes=");
            std::size_t tp = header.find("timesteps=");
            if (np == std::string::npos || tp == std::string::npos) {
                throw IoError(path + ":" + std::to_string(line_no) +
                              ": bad header, expected '% nodes=<N> timesteps=<T>'");
            }
            declared_n = std::strtoll(header.c_str() + np + 6, nullptr, 10);
            declared_t = std::strtoll(header.c_str() + tp + 10, nullptr, 10);
            if (declared_n < 1 || declared_t < 1) {
                throw IoError(path + ":" + std::to_string(line_no) + ": bad header values");
            }
            continue;
        }
        std::istringstream ss(line);
        Row r{};
        if (!(ss >> r.t >> r.i >> r.j)) {
            throw IoError(path + ":" + std::to_string(line_no) + ": malformed line");
        }
        std::string tail;
        if (ss >> tail) {
            throw IoError(path + ":" + std::to_string(line_no) + ": trailing tokens");
        }
        if (r.t < 0 || r.i < 0 || r.j < 0) {
            throw IoError(path + ":" + std::to_string(line_no) + ": negative index");
        }
        if (r.i == r.j) {
            throw IoError(path + ":" + std::to_string(line_no) + ": self-loop rejected");
        }
        if (declared_n >= 0 && (r.i >= declared_n || r.j >= declared_n)) {
            throw IoError(path + ":" + std::to_string(line_no) + ": vertex index >= declared nodes");
        }
        if (declared_t >= 0 && r.t >= declared_t) {
            throw IoError(path + ":" + std::to_string(line_no) + ": time index >= declared timesteps");
        }
        rows.push_back(r);
    }

    long long n = declared_n;
    long long steps = declared_t;
    if (n < 0 || steps < 0) {
        if (rows.empty()) throw IoError(path + ": no header and no data rows");
        long long max_v = 0;
        long long max_t = 0;
        for (const auto& r : rows) {
            max_v = std::max({max_v, r.i, r.j});
            max_t = std::max(max_t, r.t);
        }
        if (n < 0) n = max_v + 1;
        if (steps < 0) {
            steps = max_t + 1;
            // Without a header, every time step must be witnessed; gaps would
            // silently break the consecutive-step Markov assumption.
            std::vector<char> seen(steps, 0);
            for (const auto& r : rows) seen[r.t] = 1;
            for (long long t = 0; t < steps; ++t) {
                if (!seen[t]) {
                    throw IoError(path + ": gap in time indices (no rows for t=" +
                                  std::to_string(t) + " and no header)");
                }
            }
        }
    }

    std::vector<std::vector<Dyad>> edges(steps);
    for (const auto& r : rows) {
        int i = static_cast<int>(std::min(r.i, r.j));
        int j = static_cast<int>(std::max(r.i, r.j));
        edges[r.t].emplace_back(i, j);
    }
    return SnapshotTensor(static_cast<int>(n), static_cast<int>(steps), std::move(edges));
}

void save_edge_list(const SnapshotTensor& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write edge list: " + path);
    out << "% nodes=" << data.num_nodes() << " timesteps=" << data.num_steps() << "\n";
    for (int t = 0; t < data.num_steps(); ++t) {
        for (const auto& [i, j] : data.edges(t)) {
            out << t << ' ' << i << ' ' << j << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

HoldoutMask make_holdout(const SnapshotTensor& data, double fraction, RngStream& rng) {
    if (!(fraction > 0.0) || !(fraction < 1.0)) {
        throw ConfigError("holdout fraction must lie strictly in (0, 1)");
    }
    const int n = data.num_nodes();
    const int steps = data.num_steps();
    const long long per_step = data.dyads_per_step();
    const long long grid = per_step * steps;
    long long want = std::llround(fraction * static_cast<double>(grid));
    if (want < 1) want = 1;
    if (want >= grid) want = grid - 1;

    // Floyd's sampling of `want` distinct cells out of the grid.
    std::unordered_set<long long> chosen;
    chosen.reserve(static_cast<std::size_t>(want) * 2);
    for (long long v = grid - want; v < grid; ++v) {
        const long long x = static_cast<long long>(rng.next_below(static_cast<std::uint64_t>(v + 1)));
        if (!chosen.insert(x).second) chosen.insert(v);
    }

    // Unrank: cell = t * per_step + rank of (i, j) in lexicographic dyad order.
    HoldoutMask mask;
    mask.fraction = fraction;
    mask.masked.reserve(chosen.size());
    for (long long cell : chosen) {
        const int t = static_cast<int>(cell / per_step);
        long long r = cell % per_step;
        int i = 0;
        long long row_len = n - 1;
        while (r >= row_len) {
            r -= row_len;
            ++i;
            --row_len;
        }
        const int j = i + 1 + static_cast<int>(r);
        mask.masked.emplace_back(t, i, j);
    }
    std::sort(mask.masked.begin(), mask.masked.end());
    mask.build_index();
    return mask;
}

void SyntheticSpec::validate() const {
    long long total = 0;
    for (int b : block_sizes) {
        if (b <= 0) throw ConfigError("synthetic: block sizes must be positive");
        total += b;
    }
    if (total != num_nodes) {
        throw ConfigError("synthetic: block sizes must sum to num_nodes");
    }
    if (!(inter_prob >= 0.0) || !(intra_prob <= 1.0) || !(inter_prob < intra_prob)) {
        throw ConfigError("synthetic: need 0 <= inter_prob < intra_prob <= 1");
    }
    const int nb = static_cast<int>(block_sizes.size());
    if (merge_pair.first < 0 || merge_pair.first >= nb || merge_pair.second < 0 ||
        merge_pair.second >= nb || merge_pair.first == merge_pair.second) {
        throw ConfigError("synthetic: merge_pair must name two distinct blocks");
    }
    for (int t : merge_steps) {
        if (t < 0 || t >= num_steps) throw ConfigError("synthetic: merge step out of range");
    }
    if (num_steps < 1) throw ConfigError("synthetic: num_steps must be >= 1");
}

int SyntheticSpec::block_of(int vertex) const {
    int acc = 0;
    for (std::size_t b = 0; b < block_sizes.size(); ++b) {
        acc += block_sizes[b];
        if (vertex < acc) return static_cast<int>(b);
    }
    return -1;
}

SnapshotTensor generate_synthetic(const SyntheticSpec& spec, RngStream& rng) {
    spec.validate();
    std::vector<int> block(spec.num_nodes);
    for (int v = 0; v < spec.num_nodes; ++v) block[v] = spec.block_of(v);

    std::vector<char> is_merge(spec.num_steps, 0);
    for (int t : spec.merge_steps) is_merge[t] = 1;

    std::vector<std::vector<Dyad>> edges(spec.num_steps);
    for (int t = 0; t < spec.num_steps; ++t) {
        for (int i = 0; i < spec.num_nodes; ++i) {
            for (int j = i + 1; j < spec.num_nodes; ++j) {
                const int bi = block[i];
                const int bj = block[j];
                double p = spec.inter_prob;
                if (bi == bj) {
                    p = spec.intra_prob;
                } else if (is_merge[t] &&
                           ((bi == spec.merge_pair.first && bj == spec.merge_pair.second) ||
                            (bi == spec.merge_pair.second && bj == spec.merge_pair.first))) {
                    p = spec.intra_prob;
                }
                if (rng.next_double() < p) edges[t].emplace_back(i, j);
            }
        }
    }
    return SnapshotTensor(spec.num_nodes, spec.num_steps, std::move(edges));
}

}  // namespace sepm
