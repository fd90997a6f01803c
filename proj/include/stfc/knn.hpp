#pragma once

#include <span>
#include <vector>

#include "stfc/core.hpp"

namespace stfc {

struct KnnConfig {
    std::int64_t k = 80;
    bool symmetrize = true;
    int num_threads = 0;  // 0 = library default
};

struct Neighbor {
    NodeId index;
    double similarity;
};

// Top-k rows of fs by cosine similarity to query, sorted by similarity
// descending with ties broken toward the lower index. self_index >= 0
// excludes that row (the query is a member of fs).
std::vector<Neighbor> cosine_topk(std::span<const float> query, const FeatureSet& fs,
                                  std::int64_t k, std::int64_t self_index = -1);

// Exact brute-force KNN graph. Directed out-degree is exactly k; with
// cfg.symmetrize the union with the transpose is returned. Edge weights are
// cosine similarities. Deterministic for any thread count.
SparseGraph build_knn_graph(const FeatureSet& fs, const KnnConfig& cfg);

}  // namespace stfc
