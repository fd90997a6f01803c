#include "stfc/inference.hpp"

#include <algorithm>
#include <numeric>

#include "stfc/parallel.hpp"

namespace stfc {

Aggregation parse_aggregation(const std::string& name) {
    if (name == "max") return Aggregation::Max;
    if (name == "mean") return Aggregation::Mean;
    if (name == "min") return Aggregation::Min;
    if (name == "jaccard") return Aggregation::Jaccard;
    throw Error(ErrorCode::InvalidArgument, "unknown aggregation: " + name);
}

namespace {

void check_thresholds(const InferConfig& cfg) {
    if (cfg.tau1 < 0.0 || cfg.tau1 > 1.0 || cfg.tau2 < 0.0 || cfg.tau2 > 1.0)
        throw Error(ErrorCode::InvalidArgument, "thresholds must lie in [0, 1]");
}

SparseGraph keep_edges(const SparseGraph& graph, const std::vector<double>& values,
                       double threshold) {
    const auto edges = undirected_edges(graph);
    if (values.size() != edges.size())
        throw Error(ErrorCode::LengthMismatch, "one value per undirected edge required");
    std::vector<std::pair<NodeId, NodeId>> kept;
    kept.reserve(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i)
        if (values[i] >= threshold) kept.push_back(edges[i]);
    return graph_from_edges(graph.n, kept, /*symmetric=*/true);
}

void require_symmetric_no_loops(const SparseGraph& g) {
    if (!g.symmetric) throw Error(ErrorCode::GraphNotSymmetric, "node intimacy input");
    for (NodeId u = 0; u < g.n; ++u)
        for (NodeId v : g.neighbors(u))
            if (v == u) throw Error(ErrorCode::SelfLoopPresent, "node " + std::to_string(u));
}

}  // namespace

SparseGraph parse_graph(const SparseGraph& graph, const std::vector<double>& scores, double tau1) {
    return keep_edges(graph, scores, tau1);
}

IntimacyResult node_intimacy(const SparseGraph& graph, Aggregation agg) {
    require_symmetric_no_loops(graph);

    // Edge ids in canonical order: for each row u, its neighbors v > u form a
    // contiguous id range starting at upper_start[u].
    std::vector<std::uint64_t> upper_start(graph.n + 1, 0);
    for (NodeId u = 0; u < graph.n; ++u) {
        const auto nbrs = graph.neighbors(u);
        const auto first_upper =
            std::upper_bound(nbrs.begin(), nbrs.end(), u) - nbrs.begin();
        upper_start[u + 1] = upper_start[u] + (nbrs.size() - first_upper);
    }

    IntimacyResult result;
    result.values.assign(upper_start[graph.n], 0.0);

    // Row-wise sparse product: mark N(u), then for each edge (u, v) with
    // v > u count the marked entries of N(v). Each edge is owned by its
    // lower endpoint, so rows parallelize cleanly.
    parallel_for(0, static_cast<std::int64_t>(graph.n), [&](std::int64_t lo, std::int64_t hi) {
        std::vector<char> mark(graph.n, 0);
        for (std::int64_t ui = lo; ui < hi; ++ui) {
            const NodeId u = static_cast<NodeId>(ui);
            const auto nbrs = graph.neighbors(u);
            if (nbrs.empty()) continue;
            for (NodeId w : nbrs) mark[w] = 1;
            const double n1 = static_cast<double>(nbrs.size());
            std::uint64_t id = upper_start[u];
            for (NodeId v : nbrs) {
                if (v <= u) continue;
                // Neither endpoint can inflate k: u is not in N(u) and v is
                // not in N(v) with self-loops banned.
                std::uint64_t k = 0;
                for (NodeId w : graph.neighbors(v)) k += mark[w];
                const double n2 = static_cast<double>(graph.degree(v));
                const double a = static_cast<double>(k) / n1;
                const double b = static_cast<double>(k) / n2;
                double value = 0.0;
                switch (agg) {
                    case Aggregation::Max: value = std::max(a, b); break;
                    case Aggregation::Mean: value = 0.5 * (a + b); break;
                    case Aggregation::Min: value = std::min(a, b); break;
                    case Aggregation::Jaccard:
                        value = static_cast<double>(k) / (n1 + n2 - static_cast<double>(k));
                        break;
                }
                result.values[id++] = value;
            }
            for (NodeId w : nbrs) mark[w] = 0;
        }
    });
    return result;
}

SparseGraph refine_graph(const SparseGraph& graph, const IntimacyResult& ni, double tau2) {
    return keep_edges(graph, ni.values, tau2);
}

Partition connected_components(const SparseGraph& graph) {
    // Union-find with path halving.
    std::vector<NodeId> parent(graph.n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&parent](NodeId x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (NodeId u = 0; u < graph.n; ++u) {
        for (NodeId v : graph.neighbors(u)) {
            const NodeId ru = find(u), rv = find(v);
            if (ru != rv) parent[std::max(ru, rv)] = std::min(ru, rv);
        }
    }
    Partition p;
    p.labels.resize(graph.n);
    std::vector<std::int64_t> root_label(graph.n, -1);
    std::int64_t next = 0;
    for (NodeId u = 0; u < graph.n; ++u) {
        const NodeId r = find(u);
        if (root_label[r] < 0) root_label[r] = next++;
        p.labels[u] = root_label[r];
    }
    p.num_clusters = next;
    return p;
}

Partition cluster(const FeatureSet& fs, const EdgeModel& model, const KnnConfig& knn_cfg,
                  const InferConfig& infer_cfg) {
    check_thresholds(infer_cfg);
    KnnConfig cfg = knn_cfg;
    cfg.symmetrize = true;
    const SparseGraph knn = build_knn_graph(fs, cfg);

    const SparseGraph* stage = &knn;
    SparseGraph parsed;
    if (!infer_cfg.skip_parsing) {
        const ForwardTrace trace = gcn_forward(model, knn, fs);
        EdgeBatch batch;
        batch.edges = undirected_edges(knn);
        const std::vector<double> scores = edge_scores(model, trace, batch);
        parsed = parse_graph(knn, scores, infer_cfg.tau1);
        stage = &parsed;
    }

    SparseGraph refined;
    if (!infer_cfg.skip_refinement) {
        // Intimacy counts structure only, so a weighted stage graph is fine.
        const IntimacyResult ni = node_intimacy(*stage, infer_cfg.aggregation);
        refined = refine_graph(*stage, ni, infer_cfg.tau2);
        stage = &refined;
    }
    return connected_components(*stage);
}

}  // namespace stfc
