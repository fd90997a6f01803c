#include "stfc/synth.hpp"

#include <cmath>

#include "stfc/rng.hpp"

namespace stfc::synth {

std::pair<FeatureSet, Partition> generate(const SynthConfig& cfg) {
    if (cfg.num_classes < 2 || cfg.dim < 2 || cfg.per_class_min < 1 ||
        cfg.per_class_max < cfg.per_class_min || cfg.noise_scale < 0.0 ||
        cfg.overlap_scale < 0.0 || cfg.overlap_scale >= 1.0)
        throw Error(ErrorCode::InvalidArgument, "bad synth config");

    Rng rng(cfg.seed);
    const std::int64_t d = cfg.dim;

    auto renorm = [d](std::vector<double>& v) {
        double norm2 = 0.0;
        for (std::int64_t j = 0; j < d; ++j) norm2 += v[j] * v[j];
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::int64_t j = 0; j < d; ++j) v[j] *= inv;
    };

    std::vector<std::vector<double>> centers(cfg.num_classes, std::vector<double>(d));
    for (auto& c : centers) {
        for (std::int64_t j = 0; j < d; ++j) c[j] = rng.gaussian();
        renorm(c);
    }

    if (cfg.overlap_scale > 0.0) {
        // Pull every center toward the common mean direction; on the sphere
        // this is what actually brings classes closer together.
        std::vector<double> mean(d, 0.0);
        for (const auto& c : centers)
            for (std::int64_t j = 0; j < d; ++j) mean[j] += c[j];
        renorm(mean);
        for (auto& c : centers) {
            for (std::int64_t j = 0; j < d; ++j)
                c[j] = (1.0 - cfg.overlap_scale) * c[j] + cfg.overlap_scale * mean[j];
            renorm(c);
        }
    }

    std::vector<std::int64_t> sizes(cfg.num_classes);
    std::int64_t total = 0;
    for (std::int64_t c = 0; c < cfg.num_classes; ++c) {
        const std::int64_t span = cfg.per_class_max - cfg.per_class_min + 1;
        sizes[c] = cfg.per_class_min + static_cast<std::int64_t>(rng.bounded(span));
        total += sizes[c];
    }

    FeatureSet fs;
    fs.n = total;
    fs.d = d;
    fs.data.resize(static_cast<std::size_t>(total) * d);
    Partition gt;
    gt.labels.resize(total);
    gt.num_clusters = cfg.num_classes;

    std::vector<double> point(d);
    std::int64_t row = 0;
    for (std::int64_t c = 0; c < cfg.num_classes; ++c) {
        for (std::int64_t i = 0; i < sizes[c]; ++i, ++row) {
            for (std::int64_t j = 0; j < d; ++j)
                point[j] = centers[c][j] + cfg.noise_scale * rng.gaussian();
            renorm(point);
            float* out = fs.data.data() + row * d;
            for (std::int64_t j = 0; j < d; ++j) out[j] = static_cast<float>(point[j]);
            gt.labels[row] = c;
        }
    }
    // float rounding can leave rows a hair off unit norm
    normalize_rows(fs);
    return {std::move(fs), std::move(gt)};
}

SparseGraph erdos_renyi_graph(NodeId n, double avg_degree, std::uint64_t seed) {
    if (n < 2 || avg_degree <= 0.0) throw Error(ErrorCode::InvalidArgument, "bad graph size");
    Rng rng(seed);
    const std::uint64_t target = static_cast<std::uint64_t>(avg_degree * n / 2.0);
    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(target);
    for (std::uint64_t e = 0; e < target; ++e) {
        const NodeId u = static_cast<NodeId>(rng.bounded(n));
        const NodeId v = static_cast<NodeId>(rng.bounded(n));
        if (u != v) edges.emplace_back(u, v);
    }
    return graph_from_edges(n, edges, /*symmetric=*/true);
}

}  // namespace stfc::synth
