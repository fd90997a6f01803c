#pragma once

#include <string>
#include <vector>

#include "stfc/core.hpp"
#include "stfc/gcn.hpp"
#include "stfc/knn.hpp"

namespace stfc {

enum class Aggregation { Max, Mean, Min, Jaccard };

Aggregation parse_aggregation(const std::string& name);  // "max" | "mean" | "min" | "jaccard"

struct InferConfig {
    double tau1 = 0.7;   // edge-score threshold for graph parsing
    double tau2 = 0.72;  // intimacy threshold for graph refinement
    Aggregation aggregation = Aggregation::Max;
    bool skip_parsing = false;
    bool skip_refinement = false;
};

// Per-edge intimacy over the canonical undirected edge enumeration of the
// graph it was computed on.
struct IntimacyResult {
    std::vector<double> values;
};

// Keeps exactly the undirected edges with score >= tau1; scores align with
// undirected_edges(graph). Returns a symmetric binary graph.
SparseGraph parse_graph(const SparseGraph& graph, const std::vector<double>& scores, double tau1);

// For every edge (u, v): k common neighbors, n1/n2 endpoint degrees, all on
// this graph; value = aggregation(k/n1, k/n2), or k/(n1+n2-k) for Jaccard.
// The common-neighbor counts come from the sparse A*A product evaluated only
// at existing edges.
IntimacyResult node_intimacy(const SparseGraph& graph, Aggregation agg);

// Keeps edges with intimacy >= tau2; applied once.
SparseGraph refine_graph(const SparseGraph& graph, const IntimacyResult& ni, double tau2);

// Components labeled by first appearance in node-index order; isolated nodes
// become singletons.
Partition connected_components(const SparseGraph& graph);

// Full pipeline: KNN graph, GCN scores over the entire graph, parse with
// tau1, node intimacy, refine with tau2, then read off components. The skip
// flags disable the corresponding step.
Partition cluster(const FeatureSet& fs, const EdgeModel& model, const KnnConfig& knn_cfg,
                  const InferConfig& infer_cfg);

}  // namespace stfc
