#pragma once

#include <vector>

#include "stfc/core.hpp"
#include "stfc/gcn.hpp"
#include "stfc/knn.hpp"

namespace stfc {

// Per-cluster member lists and unit-norm centers derived from ground truth.
struct ClusterIndex {
    std::vector<std::vector<NodeId>> members;
    Matrix centers;  // num_clusters x d, rows L2-normalized
    std::int64_t num_clusters() const { return static_cast<std::int64_t>(members.size()); }
};

ClusterIndex build_cluster_index(const FeatureSet& fs, const Partition& gt);

struct SampledSubgraph {
    std::vector<NodeId> node_ids;  // original indices, ascending
    FeatureSet features;           // row-gathered
    Partition labels;              // gathered ground truth
    SparseGraph graph;             // KNN graph rebuilt over the sampled nodes
};

// Structure-preserved subgraph sampling: draw seed clusters, extend each seed
// to its nearest neighbor clusters by center cosine, thin the cluster set
// (CR) and the node set (SR) at random, then rebuild the KNN graph over the
// surviving nodes. Fully deterministic given spec.seed.
SampledSubgraph sample_subgraph(const ClusterIndex& idx, const FeatureSet& fs,
                                const SampleSpec& spec, const KnnConfig& knn_cfg);

// Baseline sampler for the hard-negative comparison: uniform node draw with
// the induced slice of a prebuilt full graph (no KNN rebuild), matching how
// node-level samplers treat the training graph.
SampledSubgraph uniform_node_subgraph(const FeatureSet& fs, const Partition& gt,
                                      const SparseGraph& full_graph, std::int64_t node_count,
                                      std::uint64_t seed);

// One entry per undirected edge of sub.graph, labeled 1 when the endpoints
// share a ground-truth cluster.
EdgeBatch edge_label_batch(const SampledSubgraph& sub);

}  // namespace stfc
