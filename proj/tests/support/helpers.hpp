#pragma once

// Shared generators and independent oracles for the test suites. Everything
// here stays deliberately naive: oracles must not share code paths with the
// implementations they check.

#include <set>
#include <utility>
#include <vector>

#include "stfc/core.hpp"
#include "stfc/rng.hpp"

namespace stfc::test {

inline Partition random_partition(std::int64_t n, std::int64_t max_clusters, Rng& rng) {
    std::vector<std::int64_t> labels(n);
    for (std::int64_t i = 0; i < n; ++i)
        labels[i] = static_cast<std::int64_t>(rng.bounded(max_clusters));
    return make_partition(std::move(labels));
}

inline SparseGraph random_symmetric_graph(NodeId n, double edge_prob, Rng& rng) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId u = 0; u < n; ++u)
        for (NodeId v = u + 1; v < n; ++v)
            if (rng.uniform() < edge_prob) edges.emplace_back(u, v);
    return graph_from_edges(n, edges, true);
}

inline FeatureSet random_unit_features(std::int64_t n, std::int64_t d, Rng& rng) {
    FeatureSet fs;
    fs.n = n;
    fs.d = d;
    fs.data.resize(n * d);
    for (float& v : fs.data) v = static_cast<float>(rng.gaussian());
    normalize_rows(fs);
    return fs;
}

// Neighbor sets as std::set, for brute-force intersection oracles.
inline std::vector<std::set<NodeId>> neighbor_sets(const SparseGraph& g) {
    std::vector<std::set<NodeId>> sets(g.n);
    for (NodeId u = 0; u < g.n; ++u)
        for (NodeId v : g.neighbors(u)) sets[u].insert(v);
    return sets;
}

}  // namespace stfc::test
