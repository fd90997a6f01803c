#pragma once

#include <utility>
#include <vector>

#include "stfc/core.hpp"
#include "stfc/dense.hpp"

namespace stfc {

// Row-stochastic propagation operator D^-1 (A + I) viewed over the CSR
// structure. The self-loop is applied virtually; negative cosine weights are
// clamped to zero so every row keeps non-negative mass.
struct PropagationMatrix {
    const SparseGraph* graph = nullptr;
    std::vector<double> edge_weight;  // per edge slot, clamped; 1.0 for binary graphs
    std::vector<double> inv_degree;   // per row: 1 / (1 + sum of clamped weights)
};

PropagationMatrix make_propagation(const SparseGraph& g);

// out = D^-1 (A + I) x
Matrix propagate(const PropagationMatrix& p, const Matrix& x);
Matrix propagate(const SparseGraph& g, const Matrix& x);

// out = ((A + I) D^-1) x, the transpose product; requires a symmetric graph.
Matrix propagate_transpose(const PropagationMatrix& p, const Matrix& x);

// Per-layer records kept for backprop: the concatenated layer inputs
// [F_l | A~ F_l] and the post-ReLU activations F_{l+1}.
struct ForwardTrace {
    std::vector<Matrix> concat;
    std::vector<Matrix> activations;
    const Matrix& embeddings() const { return activations.back(); }
};

// Training edges with binary same-cluster labels.
struct EdgeBatch {
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::vector<std::uint8_t> labels;
};

// Runs the L-layer encoder: F_{l+1} = relu([F_l | A~ F_l] W_l).
ForwardTrace gcn_forward(const EdgeModel& model, const SparseGraph& g, const FeatureSet& fs);

// MLP head over pair features [F_L(u) | F_L(v)]; the returned score is the
// class-1 softmax probability averaged over both edge orderings, so
// score(u, v) == score(v, u).
std::vector<double> edge_scores(const EdgeModel& model, const ForwardTrace& trace,
                                const EdgeBatch& batch);

struct LossGrads {
    double loss = 0.0;
    EdgeModel grads;  // same shapes as the model
};

// Mean cross-entropy of the symmetrized scores over the batch, with exact
// analytic gradients for every parameter (through the MLP, the pair
// concatenation, and the propagation operator).
LossGrads loss_and_grads(const EdgeModel& model, const SparseGraph& g, const FeatureSet& fs,
                         const EdgeBatch& batch);

}  // namespace stfc
