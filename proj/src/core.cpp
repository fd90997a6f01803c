#include "stfc/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "stfc/rng.hpp"

namespace stfc {

const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::NotNormalized: return "NotNormalized";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::EmptySet: return "EmptySet";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::EmptyBatch: return "EmptyBatch";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::NotEnoughClusters: return "NotEnoughClusters";
        case ErrorCode::GraphNotSymmetric: return "GraphNotSymmetric";
        case ErrorCode::SelfLoopPresent: return "SelfLoopPresent";
        case ErrorCode::DivergedLoss: return "DivergedLoss";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::CrcMismatch: return "CrcMismatch";
        case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

ValidationResult validate_feature_set(const FeatureSet& fs) {
    ValidationResult r;
    if (fs.n < 1 || fs.d < 1 || fs.data.size() != static_cast<std::size_t>(fs.n * fs.d)) {
        r.ok = false;
        r.code = ErrorCode::EmptySet;
        return r;
    }
    for (std::int64_t i = 0; i < fs.n; ++i) {
        const float* row = fs.data.data() + i * fs.d;
        double norm2 = 0.0;
        for (std::int64_t j = 0; j < fs.d; ++j) {
            const float v = row[j];
            if (!std::isfinite(v)) {
                r.ok = false;
                r.code = ErrorCode::NonFinite;
                r.row = i;
                r.col = j;
                return r;
            }
            norm2 += static_cast<double>(v) * v;
        }
        if (std::abs(std::sqrt(norm2) - 1.0) > 1e-4) {
            r.ok = false;
            r.code = ErrorCode::NotNormalized;
            r.row = i;
            return r;
        }
    }
    return r;
}

void normalize_rows(FeatureSet& fs) {
    for (std::int64_t i = 0; i < fs.n; ++i) {
        float* row = fs.data.data() + i * fs.d;
        double norm2 = 0.0;
        for (std::int64_t j = 0; j < fs.d; ++j) {
            if (!std::isfinite(row[j]))
                throw Error(ErrorCode::NonFinite, "feature row " + std::to_string(i));
            norm2 += static_cast<double>(row[j]) * row[j];
        }
        if (norm2 <= 0.0)
            throw Error(ErrorCode::NonFinite, "zero-norm feature row " + std::to_string(i));
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::int64_t j = 0; j < fs.d; ++j)
            row[j] = static_cast<float>(row[j] * inv);
    }
}

SparseGraph graph_from_edges(NodeId n, std::span<const std::pair<NodeId, NodeId>> edges,
                             bool symmetric) {
    std::vector<std::vector<NodeId>> adj(n);
    for (const auto& [u, v] : edges) {
        if (u >= n || v >= n)
            throw Error(ErrorCode::IndexOutOfRange, "edge endpoint out of range");
        if (u == v) continue;
        adj[u].push_back(v);
        if (symmetric) adj[v].push_back(u);
    }
    SparseGraph g;
    g.n = n;
    g.symmetric = symmetric;
    g.row_ptr.assign(n + 1, 0);
    for (NodeId u = 0; u < n; ++u) {
        auto& nbrs = adj[u];
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
        g.row_ptr[u + 1] = g.row_ptr[u] + nbrs.size();
    }
    g.col_idx.reserve(g.row_ptr[n]);
    for (NodeId u = 0; u < n; ++u)
        g.col_idx.insert(g.col_idx.end(), adj[u].begin(), adj[u].end());
    return g;
}

SparseGraph transpose(const SparseGraph& g) {
    SparseGraph t;
    t.n = g.n;
    t.symmetric = g.symmetric;
    t.row_ptr.assign(g.n + 1, 0);
    for (NodeId v : g.col_idx) t.row_ptr[v + 1]++;
    for (NodeId u = 0; u < g.n; ++u) t.row_ptr[u + 1] += t.row_ptr[u];
    t.col_idx.resize(g.col_idx.size());
    if (g.has_weights()) t.weights.resize(g.weights.size());
    std::vector<std::uint64_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
    // Scatter in source-row order so columns stay sorted within each row.
    for (NodeId u = 0; u < g.n; ++u) {
        for (std::uint64_t e = g.row_ptr[u]; e < g.row_ptr[u + 1]; ++e) {
            const NodeId v = g.col_idx[e];
            const std::uint64_t slot = cursor[v]++;
            t.col_idx[slot] = u;
            if (g.has_weights()) t.weights[slot] = g.weights[e];
        }
    }
    return t;
}

bool is_symmetric(const SparseGraph& g) {
    const SparseGraph t = transpose(g);
    return t.row_ptr == g.row_ptr && t.col_idx == g.col_idx && t.weights == g.weights;
}

std::vector<std::pair<NodeId, NodeId>> undirected_edges(const SparseGraph& g) {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(g.num_edge_slots() / 2);
    for (NodeId u = 0; u < g.n; ++u)
        for (NodeId v : g.neighbors(u))
            if (u < v) out.emplace_back(u, v);
    return out;
}

Partition make_partition(std::vector<std::int64_t> labels) {
    Partition p;
    p.labels = std::move(labels);
    std::unordered_set<std::int64_t> distinct;
    for (std::int64_t l : p.labels) {
        if (l < 0) throw Error(ErrorCode::InvalidArgument, "negative cluster id");
        distinct.insert(l);
    }
    p.num_clusters = static_cast<std::int64_t>(distinct.size());
    return p;
}

Partition canonicalize(const Partition& p) {
    Partition out;
    out.labels.resize(p.labels.size());
    std::unordered_map<std::int64_t, std::int64_t> remap;
    remap.reserve(p.labels.size());
    std::int64_t next = 0;
    for (std::size_t i = 0; i < p.labels.size(); ++i) {
        if (p.labels[i] < 0) throw Error(ErrorCode::InvalidArgument, "negative cluster id");
        auto [it, inserted] = remap.try_emplace(p.labels[i], next);
        if (inserted) ++next;
        out.labels[i] = it->second;
    }
    out.num_clusters = next;
    return out;
}

bool same_clustering(const Partition& a, const Partition& b) {
    if (a.labels.size() != b.labels.size()) return false;
    return canonicalize(a).labels == canonicalize(b).labels;
}

EdgeModel init_edge_model(std::int64_t input_dim, std::span<const std::int64_t> gcn_widths,
                          std::int64_t mlp_hidden, std::uint64_t seed) {
    if (input_dim < 1 || gcn_widths.empty() || mlp_hidden < 1)
        throw Error(ErrorCode::InvalidArgument, "model dimensions must be positive");
    EdgeModel m;
    m.dims.push_back(input_dim);
    for (std::int64_t w : gcn_widths) {
        if (w < 1) throw Error(ErrorCode::InvalidArgument, "layer width must be positive");
        m.dims.push_back(w);
    }
    Rng rng(seed);
    auto fan_init = [&rng](Matrix& w) {
        const double bound = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
        for (double& v : w.data) v = (2.0 * rng.uniform() - 1.0) * bound;
    };
    for (std::size_t l = 0; l + 1 < m.dims.size(); ++l) {
        Matrix w(2 * m.dims[l], m.dims[l + 1]);
        fan_init(w);
        m.gcn_weights.push_back(std::move(w));
    }
    m.mlp_w1 = Matrix(2 * m.dims.back(), mlp_hidden);
    fan_init(m.mlp_w1);
    m.mlp_b1.assign(mlp_hidden, 0.0);
    m.mlp_w2 = Matrix(mlp_hidden, 2);
    fan_init(m.mlp_w2);
    m.mlp_b2.assign(2, 0.0);
    return m;
}

void check_model_shapes(const EdgeModel& m) {
    if (m.dims.size() != m.gcn_weights.size() + 1)
        throw Error(ErrorCode::ShapeMismatch, "dims do not match layer count");
    for (std::size_t l = 0; l < m.gcn_weights.size(); ++l) {
        const Matrix& w = m.gcn_weights[l];
        if (w.rows != 2 * m.dims[l] || w.cols != m.dims[l + 1])
            throw Error(ErrorCode::ShapeMismatch, "gcn layer " + std::to_string(l));
    }
    if (m.mlp_w1.rows != 2 * m.dims.back() || m.mlp_w1.cols != static_cast<std::int64_t>(m.mlp_b1.size()))
        throw Error(ErrorCode::ShapeMismatch, "mlp hidden layer");
    if (m.mlp_w2.rows != m.mlp_w1.cols || m.mlp_w2.cols != 2 || m.mlp_b2.size() != 2)
        throw Error(ErrorCode::ShapeMismatch, "mlp output layer");
}

bool model_is_finite(const EdgeModel& m) {
    bool finite = true;
    visit_params(m, [&finite](const std::string&, std::span<const double> p) {
        for (double v : p)
            if (!std::isfinite(v)) finite = false;
    });
    return finite;
}

void check_sample_spec(const SampleSpec& s) {
    if (s.m < 1 || s.n_neighbors < 0 || s.k1 < 1 || s.k2_frac <= 0.0 || s.k2_frac > 1.0)
        throw Error(ErrorCode::InvalidArgument, "bad sample spec");
}

}  // namespace stfc
