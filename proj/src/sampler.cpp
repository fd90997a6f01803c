#include "stfc/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "stfc/rng.hpp"

namespace stfc {

ClusterIndex build_cluster_index(const FeatureSet& fs, const Partition& gt) {
    if (static_cast<std::int64_t>(gt.labels.size()) != fs.n)
        throw Error(ErrorCode::LengthMismatch, "labels vs features");
    const Partition canon = canonicalize(gt);
    ClusterIndex idx;
    idx.members.resize(canon.num_clusters);
    for (std::size_t i = 0; i < canon.labels.size(); ++i)
        idx.members[canon.labels[i]].push_back(static_cast<NodeId>(i));

    idx.centers = Matrix(canon.num_clusters, fs.d);
    for (std::int64_t c = 0; c < canon.num_clusters; ++c) {
        double* center = idx.centers.row(c);
        for (NodeId i : idx.members[c]) {
            const float* row = fs.data.data() + static_cast<std::int64_t>(i) * fs.d;
            for (std::int64_t j = 0; j < fs.d; ++j) center[j] += row[j];
        }
        double norm2 = 0.0;
        for (std::int64_t j = 0; j < fs.d; ++j) norm2 += center[j] * center[j];
        if (norm2 <= 0.0)
            throw Error(ErrorCode::NonFinite, "degenerate cluster center " + std::to_string(c));
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::int64_t j = 0; j < fs.d; ++j) center[j] *= inv;
    }
    return idx;
}

namespace {

// Nearest clusters to `seed` by center cosine, excluding the seed itself;
// ties break toward the lower cluster id.
std::vector<std::int64_t> nearest_clusters(const ClusterIndex& idx, std::int64_t seed,
                                           std::int64_t count) {
    const std::int64_t c = idx.num_clusters();
    std::vector<std::pair<double, std::int64_t>> sims;
    sims.reserve(c - 1);
    const double* s = idx.centers.row(seed);
    for (std::int64_t other = 0; other < c; ++other) {
        if (other == seed) continue;
        const double* o = idx.centers.row(other);
        double dot = 0.0;
        for (std::int64_t j = 0; j < idx.centers.cols; ++j) dot += s[j] * o[j];
        sims.emplace_back(dot, other);
    }
    count = std::min<std::int64_t>(count, sims.size());
    std::partial_sort(sims.begin(), sims.begin() + count, sims.end(),
                      [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                      });
    std::vector<std::int64_t> out(count);
    for (std::int64_t i = 0; i < count; ++i) out[i] = sims[i].second;
    return out;
}

SampledSubgraph gather(const FeatureSet& fs, const Partition& gt, std::vector<NodeId> nodes) {
    SampledSubgraph sub;
    sub.node_ids = std::move(nodes);
    sub.features.n = static_cast<std::int64_t>(sub.node_ids.size());
    sub.features.d = fs.d;
    sub.features.data.resize(sub.features.n * fs.d);
    sub.labels.labels.resize(sub.node_ids.size());
    for (std::size_t i = 0; i < sub.node_ids.size(); ++i) {
        const float* src = fs.data.data() + static_cast<std::int64_t>(sub.node_ids[i]) * fs.d;
        std::copy(src, src + fs.d, sub.features.data.data() + static_cast<std::int64_t>(i) * fs.d);
        sub.labels.labels[i] = gt.labels[sub.node_ids[i]];
    }
    sub.labels = make_partition(std::move(sub.labels.labels));
    return sub;
}

}  // namespace

SampledSubgraph sample_subgraph(const ClusterIndex& idx, const FeatureSet& fs,
                                const SampleSpec& spec, const KnnConfig& knn_cfg) {
    check_sample_spec(spec);
    const std::int64_t c = idx.num_clusters();
    if (c < spec.m)
        throw Error(ErrorCode::NotEnoughClusters,
                    std::to_string(c) + " clusters, need " + std::to_string(spec.m));
    Rng rng(spec.seed);

    // Seeds, then per-seed neighbor extension, unioned with dedup.
    const auto seeds = rng.sample_without_replacement(c, spec.m);
    std::vector<char> in_s1(c, 0);
    for (std::uint64_t s : seeds) in_s1[s] = 1;
    for (std::uint64_t s : seeds)
        for (std::int64_t nb : nearest_clusters(idx, static_cast<std::int64_t>(s), spec.n_neighbors))
            in_s1[nb] = 1;
    std::vector<std::int64_t> s1;
    for (std::int64_t i = 0; i < c; ++i)
        if (in_s1[i]) s1.push_back(i);

    // CR: keep k1 clusters drawn uniformly (all if fewer).
    std::vector<std::int64_t> s2;
    if (static_cast<std::int64_t>(s1.size()) > spec.k1) {
        const auto picks = rng.sample_without_replacement(s1.size(), spec.k1);
        s2.reserve(picks.size());
        for (std::uint64_t p : picks) s2.push_back(s1[p]);
        std::sort(s2.begin(), s2.end());
    } else {
        s2 = s1;
    }

    // SR: keep floor(k2_frac * |nodes|) nodes drawn uniformly.
    std::vector<NodeId> pool;
    for (std::int64_t cid : s2)
        pool.insert(pool.end(), idx.members[cid].begin(), idx.members[cid].end());
    const std::int64_t keep = static_cast<std::int64_t>(spec.k2_frac * pool.size());
    std::vector<NodeId> nodes;
    if (keep < static_cast<std::int64_t>(pool.size())) {
        const auto picks = rng.sample_without_replacement(pool.size(), keep);
        nodes.reserve(keep);
        for (std::uint64_t p : picks) nodes.push_back(pool[p]);
        std::sort(nodes.begin(), nodes.end());
    } else {
        nodes = std::move(pool);
        std::sort(nodes.begin(), nodes.end());
    }

    // Cluster ids double as the gathered ground-truth labels.
    std::vector<std::int64_t> node_label(fs.n, 0);
    for (std::int64_t cid = 0; cid < c; ++cid)
        for (NodeId i : idx.members[cid]) node_label[i] = cid;

    SampledSubgraph sub = gather(fs, make_partition(std::move(node_label)), std::move(nodes));

    // Rebuild the KNN affinity graph over the sampled nodes. Tiny subgraphs
    // clamp k so the rebuild stays well-defined.
    KnnConfig cfg = knn_cfg;
    cfg.k = std::min<std::int64_t>(cfg.k, sub.features.n - 1);
    if (cfg.k < 1)
        throw Error(ErrorCode::NotEnoughClusters, "sampled subgraph has fewer than 2 nodes");
    sub.graph = build_knn_graph(sub.features, cfg);
    return sub;
}

SampledSubgraph uniform_node_subgraph(const FeatureSet& fs, const Partition& gt,
                                      const SparseGraph& full_graph, std::int64_t node_count,
                                      std::uint64_t seed) {
    if (static_cast<std::int64_t>(gt.labels.size()) != fs.n)
        throw Error(ErrorCode::LengthMismatch, "labels vs features");
    if (node_count < 1 || node_count > fs.n)
        throw Error(ErrorCode::InvalidArgument, "node count out of range");
    Rng rng(seed);
    const auto picks = rng.sample_without_replacement(fs.n, node_count);
    std::vector<NodeId> nodes(picks.begin(), picks.end());
    std::sort(nodes.begin(), nodes.end());

    SampledSubgraph sub = gather(fs, gt, std::move(nodes));

    // Induced slice: keep edges whose endpoints both survived.
    std::vector<std::int64_t> remap(fs.n, -1);
    for (std::size_t i = 0; i < sub.node_ids.size(); ++i) remap[sub.node_ids[i]] = i;
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId u = 0; u < full_graph.n; ++u) {
        if (remap[u] < 0) continue;
        for (NodeId v : full_graph.neighbors(u)) {
            if (u < v && remap[v] >= 0)
                edges.emplace_back(static_cast<NodeId>(remap[u]), static_cast<NodeId>(remap[v]));
        }
    }
    sub.graph = graph_from_edges(static_cast<NodeId>(sub.node_ids.size()), edges, true);
    return sub;
}

EdgeBatch edge_label_batch(const SampledSubgraph& sub) {
    EdgeBatch batch;
    for (const auto& [u, v] : undirected_edges(sub.graph)) {
        batch.edges.emplace_back(u, v);
        batch.labels.push_back(sub.labels.labels[u] == sub.labels.labels[v] ? 1 : 0);
    }
    return batch;
}

}  // namespace stfc
