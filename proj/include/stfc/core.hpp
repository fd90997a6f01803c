#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "stfc/dense.hpp"

namespace stfc {

using NodeId = std::uint32_t;

enum class ErrorCode {
    NotNormalized,
    NonFinite,
    EmptySet,
    KTooLarge,
    ShapeMismatch,
    IndexOutOfRange,
    EmptyBatch,
    LengthMismatch,
    NotEnoughClusters,
    GraphNotSymmetric,
    SelfLoopPresent,
    DivergedLoss,
    IoError,
    BadMagic,
    CrcMismatch,
    FormatVersionMismatch,
    InvalidArgument,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

// N unit-normalized feature rows of dimension D, row-major, 32-bit storage.
struct FeatureSet {
    std::int64_t n = 0;
    std::int64_t d = 0;
    std::vector<float> data;  // n * d

    std::span<const float> row(std::int64_t i) const {
        return {data.data() + i * d, static_cast<std::size_t>(d)};
    }
};

struct ValidationResult {
    bool ok = true;
    ErrorCode code = ErrorCode::EmptySet;
    std::int64_t row = -1;
    std::int64_t col = -1;
};

// Checks shape, finiteness and unit row norms (tolerance 1e-4).
ValidationResult validate_feature_set(const FeatureSet& fs);

// Scales every row to unit L2 norm in place. Zero rows raise NonFinite.
void normalize_rows(FeatureSet& fs);

// CSR adjacency. Self-loops are never stored; propagation adds them
// virtually. weights empty means a binary graph.
struct SparseGraph {
    NodeId n = 0;
    std::vector<std::uint64_t> row_ptr;  // n + 1
    std::vector<NodeId> col_idx;         // strictly increasing within each row
    std::vector<float> weights;          // per edge slot, or empty
    bool symmetric = false;

    std::uint64_t num_edge_slots() const { return col_idx.size(); }
    std::uint64_t degree(NodeId u) const { return row_ptr[u + 1] - row_ptr[u]; }
    std::span<const NodeId> neighbors(NodeId u) const {
        return {col_idx.data() + row_ptr[u], static_cast<std::size_t>(degree(u))};
    }
    std::span<const float> edge_weights(NodeId u) const {
        return {weights.data() + row_ptr[u], static_cast<std::size_t>(degree(u))};
    }
    bool has_weights() const { return !weights.empty(); }
};

// Builds a CSR graph from an edge list. Edges are deduplicated; when
// symmetric, each input edge is mirrored. Self-loops are dropped.
SparseGraph graph_from_edges(NodeId n, std::span<const std::pair<NodeId, NodeId>> edges,
                             bool symmetric);

SparseGraph transpose(const SparseGraph& g);

// Structural + weight equality of g and its transpose.
bool is_symmetric(const SparseGraph& g);

// Canonical undirected edge enumeration: pairs (u, v) with u < v, ordered by
// (u, v). For a symmetric graph this lists every undirected edge once; the
// order defines the alignment of per-edge score and intimacy vectors.
std::vector<std::pair<NodeId, NodeId>> undirected_edges(const SparseGraph& g);

// Cluster assignment, one non-negative id per node.
struct Partition {
    std::vector<std::int64_t> labels;
    std::int64_t num_clusters = 0;
};

// Builds a Partition from raw labels, computing the distinct-id count.
Partition make_partition(std::vector<std::int64_t> labels);

// Relabels by order of first appearance; idempotent and preserves the
// same-cluster relation exactly.
Partition canonicalize(const Partition& p);

bool same_clustering(const Partition& a, const Partition& b);

// L-layer GCN weights plus the 2-layer MLP edge classifier head.
// gcn_weights[l] has shape (2 * dims[l]) x dims[l + 1]; the MLP consumes the
// concatenation of two endpoint embeddings (width 2 * dims.back()).
struct EdgeModel {
    std::vector<Matrix> gcn_weights;
    Matrix mlp_w1;               // (2 * dims.back()) x mlp_hidden
    std::vector<double> mlp_b1;  // mlp_hidden
    Matrix mlp_w2;               // mlp_hidden x 2
    std::vector<double> mlp_b2;  // 2

    std::vector<std::int64_t> dims;  // dims[0] = input width, then per-layer output widths

    std::int64_t input_dim() const { return dims.empty() ? 0 : dims.front(); }
    std::int64_t output_dim() const { return dims.empty() ? 0 : dims.back(); }
    std::int64_t num_layers() const { return static_cast<std::int64_t>(gcn_weights.size()); }
    std::int64_t mlp_hidden() const { return mlp_w1.cols; }
};

// Fan-based uniform init, zero biases, deterministic per seed.
EdgeModel init_edge_model(std::int64_t input_dim, std::span<const std::int64_t> gcn_widths,
                          std::int64_t mlp_hidden, std::uint64_t seed);

// Throws ShapeMismatch if the recorded dims do not chain.
void check_model_shapes(const EdgeModel& m);

bool model_is_finite(const EdgeModel& m);

// Visits every parameter tensor (weights then biases) in a fixed order.
// Used by the optimizer, serialization and the gradient checker.
template <class ModelT, class Fn>
void visit_params(ModelT& m, Fn&& fn) {
    using Elem = std::conditional_t<std::is_const_v<ModelT>, const double, double>;
    using View = std::span<Elem>;
    for (std::size_t l = 0; l < m.gcn_weights.size(); ++l)
        fn("gcn_w" + std::to_string(l), View(m.gcn_weights[l].data));
    fn(std::string("mlp_w1"), View(m.mlp_w1.data));
    fn(std::string("mlp_b1"), View(m.mlp_b1));
    fn(std::string("mlp_w2"), View(m.mlp_w2.data));
    fn(std::string("mlp_b2"), View(m.mlp_b2));
}

// SPSS hyperparameters: seed-cluster count, near-cluster fan-out, CR cluster
// subset size, SR node-keep fraction, RNG seed.
struct SampleSpec {
    std::int64_t m = 2;
    std::int64_t n_neighbors = 750;
    std::int64_t k1 = 1300;
    double k2_frac = 0.9;
    std::uint64_t seed = 0;
};

void check_sample_spec(const SampleSpec& s);

}  // namespace stfc
