#include "stfc/gcn.hpp"

#include <algorithm>
#include <cmath>

#include "stfc/parallel.hpp"

namespace stfc {

namespace {

constexpr std::int64_t kEdgeChunk = 4096;  // orderings per MLP block

Matrix to_matrix(const FeatureSet& fs) {
    Matrix m(fs.n, fs.d);
    for (std::int64_t i = 0; i < fs.n; ++i)
        for (std::int64_t j = 0; j < fs.d; ++j) m(i, j) = fs.data[i * fs.d + j];
    return m;
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, a.cols + b.cols);
    parallel_for(0, a.rows, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            std::copy(a.row(i), a.row(i) + a.cols, out.row(i));
            std::copy(b.row(i), b.row(i) + b.cols, out.row(i) + a.cols);
        }
    });
    return out;
}

void relu_inplace(Matrix& m) {
    for (double& v : m.data) v = v > 0.0 ? v : 0.0;
}

// Forward state of the MLP head for one chunk of edge orderings.
struct MlpChunk {
    Matrix hidden;  // post-ReLU
    Matrix prob;    // softmax rows
};

// Splits W1 by pair-feature half: x W1 = F_L(u) W1_top + F_L(v) W1_bot, which
// turns the per-edge product into two per-node products.
struct SplitW1 {
    Matrix top, bot;
};

SplitW1 split_w1(const EdgeModel& model) {
    const std::int64_t d = model.output_dim(), h = model.mlp_hidden();
    SplitW1 s{Matrix(d, h), Matrix(d, h)};
    for (std::int64_t i = 0; i < d; ++i) {
        std::copy(model.mlp_w1.row(i), model.mlp_w1.row(i) + h, s.top.row(i));
        std::copy(model.mlp_w1.row(d + i), model.mlp_w1.row(d + i) + h, s.bot.row(i));
    }
    return s;
}

void softmax2_inplace(double* z) {
    const double m = std::max(z[0], z[1]);
    const double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m);
    const double inv = 1.0 / (e0 + e1);
    z[0] = e0 * inv;
    z[1] = e1 * inv;
}

// hidden/prob for orderings [begin, end); ordering 2i is (u,v), 2i+1 is (v,u).
MlpChunk mlp_forward_chunk(const EdgeModel& model, const Matrix& proj_top, const Matrix& proj_bot,
                           const EdgeBatch& batch, std::int64_t begin, std::int64_t end) {
    const std::int64_t h = model.mlp_hidden();
    MlpChunk c{Matrix(end - begin, h), Matrix(end - begin, 2)};
    parallel_for(begin, end, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t o = lo; o < hi; ++o) {
            const auto [u, v] = batch.edges[o / 2];
            const NodeId a = (o % 2 == 0) ? u : v;
            const NodeId b = (o % 2 == 0) ? v : u;
            double* hd = c.hidden.row(o - begin);
            const double* pa = proj_top.row(a);
            const double* pb = proj_bot.row(b);
            for (std::int64_t j = 0; j < h; ++j) {
                const double z = pa[j] + pb[j] + model.mlp_b1[j];
                hd[j] = z > 0.0 ? z : 0.0;
            }
            double* zr = c.prob.row(o - begin);
            zr[0] = model.mlp_b2[0];
            zr[1] = model.mlp_b2[1];
            for (std::int64_t j = 0; j < h; ++j) {
                zr[0] += hd[j] * model.mlp_w2(j, 0);
                zr[1] += hd[j] * model.mlp_w2(j, 1);
            }
            softmax2_inplace(zr);
        }
    });
    return c;
}

void check_batch(const EdgeBatch& batch, NodeId n) {
    if (batch.labels.size() != batch.edges.size())
        throw Error(ErrorCode::LengthMismatch, "edge batch labels");
    for (const auto& [u, v] : batch.edges) {
        if (u >= n || v >= n) throw Error(ErrorCode::IndexOutOfRange, "edge endpoint");
        if (u == v) throw Error(ErrorCode::SelfLoopPresent, "self edge in batch");
    }
}

}  // namespace

PropagationMatrix make_propagation(const SparseGraph& g) {
    PropagationMatrix p;
    p.graph = &g;
    const std::uint64_t nnz = g.num_edge_slots();
    p.edge_weight.resize(nnz);
    if (g.has_weights()) {
        for (std::uint64_t e = 0; e < nnz; ++e)
            p.edge_weight[e] = std::max(0.0, static_cast<double>(g.weights[e]));
    } else {
        std::fill(p.edge_weight.begin(), p.edge_weight.end(), 1.0);
    }
    p.inv_degree.resize(g.n);
    for (NodeId u = 0; u < g.n; ++u) {
        double sum = 1.0;  // virtual self-loop
        for (std::uint64_t e = g.row_ptr[u]; e < g.row_ptr[u + 1]; ++e) sum += p.edge_weight[e];
        p.inv_degree[u] = 1.0 / sum;
    }
    return p;
}

Matrix propagate(const PropagationMatrix& p, const Matrix& x) {
    const SparseGraph& g = *p.graph;
    if (x.rows != static_cast<std::int64_t>(g.n))
        throw Error(ErrorCode::ShapeMismatch, "feature rows != graph nodes");
    Matrix out(x.rows, x.cols);
    const std::int64_t d = x.cols;
    parallel_for(0, x.rows, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t u = lo; u < hi; ++u) {
            double* dst = out.row(u);
            std::copy(x.row(u), x.row(u) + d, dst);
            for (std::uint64_t e = g.row_ptr[u]; e < g.row_ptr[u + 1]; ++e) {
                const double w = p.edge_weight[e];
                const double* src = x.row(g.col_idx[e]);
                for (std::int64_t j = 0; j < d; ++j) dst[j] += w * src[j];
            }
            const double s = p.inv_degree[u];
            for (std::int64_t j = 0; j < d; ++j) dst[j] *= s;
        }
    });
    return out;
}

Matrix propagate(const SparseGraph& g, const Matrix& x) {
    return propagate(make_propagation(g), x);
}

Matrix propagate_transpose(const PropagationMatrix& p, const Matrix& x) {
    const SparseGraph& g = *p.graph;
    if (!g.symmetric)
        throw Error(ErrorCode::GraphNotSymmetric, "transpose propagation needs a symmetric graph");
    if (x.rows != static_cast<std::int64_t>(g.n))
        throw Error(ErrorCode::ShapeMismatch, "feature rows != graph nodes");
    // (A + I) D^-1 x: scale rows first, then aggregate. Symmetry makes the
    // row-wise weights coincide with the column-wise ones.
    Matrix scaled(x.rows, x.cols);
    const std::int64_t d = x.cols;
    parallel_for(0, x.rows, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t u = lo; u < hi; ++u) {
            const double s = p.inv_degree[u];
            const double* src = x.row(u);
            double* dst = scaled.row(u);
            for (std::int64_t j = 0; j < d; ++j) dst[j] = s * src[j];
        }
    });
    Matrix out(x.rows, x.cols);
    parallel_for(0, x.rows, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t u = lo; u < hi; ++u) {
            double* dst = out.row(u);
            std::copy(scaled.row(u), scaled.row(u) + d, dst);
            for (std::uint64_t e = g.row_ptr[u]; e < g.row_ptr[u + 1]; ++e) {
                const double w = p.edge_weight[e];
                const double* src = scaled.row(g.col_idx[e]);
                for (std::int64_t j = 0; j < d; ++j) dst[j] += w * src[j];
            }
        }
    });
    return out;
}

ForwardTrace gcn_forward(const EdgeModel& model, const SparseGraph& g, const FeatureSet& fs) {
    check_model_shapes(model);
    if (fs.d != model.input_dim())
        throw Error(ErrorCode::ShapeMismatch, "feature width != model input width");
    if (fs.n != static_cast<std::int64_t>(g.n))
        throw Error(ErrorCode::ShapeMismatch, "feature rows != graph nodes");
    const PropagationMatrix prop = make_propagation(g);
    ForwardTrace trace;
    trace.concat.reserve(model.gcn_weights.size());
    trace.activations.reserve(model.gcn_weights.size());
    const Matrix input = to_matrix(fs);
    const Matrix* f = &input;
    for (const Matrix& w : model.gcn_weights) {
        Matrix c = concat_cols(*f, propagate(prop, *f));
        Matrix z;
        matmul(c, w, z);
        relu_inplace(z);
        trace.concat.push_back(std::move(c));
        trace.activations.push_back(std::move(z));
        f = &trace.activations.back();
    }
    return trace;
}

std::vector<double> edge_scores(const EdgeModel& model, const ForwardTrace& trace,
                                const EdgeBatch& batch) {
    const Matrix& emb = trace.embeddings();
    for (const auto& [u, v] : batch.edges)
        if (static_cast<std::int64_t>(u) >= emb.rows || static_cast<std::int64_t>(v) >= emb.rows)
            throw Error(ErrorCode::IndexOutOfRange, "edge endpoint");
    const SplitW1 w1 = split_w1(model);
    Matrix proj_top, proj_bot;
    matmul(emb, w1.top, proj_top);
    matmul(emb, w1.bot, proj_bot);

    const std::int64_t orderings = 2 * static_cast<std::int64_t>(batch.edges.size());
    std::vector<double> scores(batch.edges.size());
    for (std::int64_t begin = 0; begin < orderings; begin += kEdgeChunk) {
        const std::int64_t end = std::min(orderings, begin + kEdgeChunk);
        const MlpChunk c = mlp_forward_chunk(model, proj_top, proj_bot, batch, begin, end);
        for (std::int64_t o = begin; o < end; o += 2)
            scores[o / 2] = 0.5 * (c.prob(o - begin, 1) + c.prob(o - begin + 1, 1));
    }
    return scores;
}

LossGrads loss_and_grads(const EdgeModel& model, const SparseGraph& g, const FeatureSet& fs,
                         const EdgeBatch& batch) {
    if (batch.edges.empty()) throw Error(ErrorCode::EmptyBatch, "no edges in batch");
    check_batch(batch, g.n);

    const PropagationMatrix prop = make_propagation(g);
    const ForwardTrace trace = gcn_forward(model, g, fs);
    const Matrix& emb = trace.embeddings();
    const std::int64_t n = emb.rows, d = emb.cols, h = model.mlp_hidden();

    LossGrads out;
    out.grads.dims = model.dims;
    for (const Matrix& w : model.gcn_weights) out.grads.gcn_weights.emplace_back(w.rows, w.cols);
    out.grads.mlp_w1 = Matrix(model.mlp_w1.rows, model.mlp_w1.cols);
    out.grads.mlp_b1.assign(h, 0.0);
    out.grads.mlp_w2 = Matrix(model.mlp_w2.rows, model.mlp_w2.cols);
    out.grads.mlp_b2.assign(2, 0.0);

    const SplitW1 w1 = split_w1(model);
    Matrix proj_top, proj_bot;
    matmul(emb, w1.top, proj_top);
    matmul(emb, w1.bot, proj_bot);

    // dL/d(hidden pre-activation), scattered per endpoint. dW1 and dF_L are
    // recovered from these with two dense products after the edge loop.
    Matrix grad_top(n, h), grad_bot(n, h);

    const std::int64_t batch_size = static_cast<std::int64_t>(batch.edges.size());
    const std::int64_t orderings = 2 * batch_size;
    const double inv_b = 1.0 / static_cast<double>(batch_size);
    double loss = 0.0;

    for (std::int64_t begin = 0; begin < orderings; begin += kEdgeChunk) {
        const std::int64_t end = std::min(orderings, begin + kEdgeChunk);
        const MlpChunk c = mlp_forward_chunk(model, proj_top, proj_bot, batch, begin, end);
        // Sequential over the chunk: scatter targets can collide across edges.
        for (std::int64_t o = begin; o < end; o += 2) {
            const std::int64_t e = o / 2;
            const auto [u, v] = batch.edges[e];
            const int y = batch.labels[e] ? 1 : 0;
            const double* q0 = c.prob.row(o - begin);
            const double* q1 = c.prob.row(o - begin + 1);
            const double s = 0.5 * (q0[y] + q1[y]);
            loss -= inv_b * std::log(s);
            // d(-log s)/dq_o[j] via the softmax Jacobian, for both orderings
            const double gy = -inv_b * 0.5 / s;
            for (int ord = 0; ord < 2; ++ord) {
                const double* q = ord == 0 ? q0 : q1;
                double dz[2];
                dz[y] = gy * q[y] * (1.0 - q[y]);
                dz[1 - y] = -gy * q[y] * q[1 - y];
                const double* hd = c.hidden.row(o - begin + ord);
                out.grads.mlp_b2[0] += dz[0];
                out.grads.mlp_b2[1] += dz[1];
                const NodeId head = ord == 0 ? u : v;
                const NodeId tail = ord == 0 ? v : u;
                double* gt = grad_top.row(head);
                double* gb = grad_bot.row(tail);
                double* gb1 = out.grads.mlp_b1.data();
                for (std::int64_t j = 0; j < h; ++j) {
                    if (hd[j] <= 0.0) continue;  // ReLU mask
                    const double dh = dz[0] * model.mlp_w2(j, 0) + dz[1] * model.mlp_w2(j, 1);
                    out.grads.mlp_w2(j, 0) += hd[j] * dz[0];
                    out.grads.mlp_w2(j, 1) += hd[j] * dz[1];
                    gb1[j] += dh;
                    gt[j] += dh;
                    gb[j] += dh;
                }
            }
        }
    }
    out.loss = loss;

    // dW1 = [emb^T grad_top ; emb^T grad_bot], dF_L = grad_top W1_top^T + ...
    {
        Matrix dtop(d, h), dbot(d, h);
        matmul_at_b_accum(emb, grad_top, dtop);
        matmul_at_b_accum(emb, grad_bot, dbot);
        for (std::int64_t i = 0; i < d; ++i) {
            std::copy(dtop.row(i), dtop.row(i) + h, out.grads.mlp_w1.row(i));
            std::copy(dbot.row(i), dbot.row(i) + h, out.grads.mlp_w1.row(d + i));
        }
    }
    Matrix dF;
    {
        Matrix a, b;
        matmul_a_bt(grad_top, w1.top, a);
        matmul_a_bt(grad_bot, w1.bot, b);
        dF = std::move(a);
        for (std::size_t i = 0; i < dF.data.size(); ++i) dF.data[i] += b.data[i];
    }

    // Back through the GCN stack.
    for (std::int64_t l = model.num_layers() - 1; l >= 0; --l) {
        const Matrix& act = trace.activations[l];
        Matrix& dZ = dF;  // reuse: mask in place
        for (std::size_t i = 0; i < dZ.data.size(); ++i)
            if (act.data[i] <= 0.0) dZ.data[i] = 0.0;
        matmul_at_b_accum(trace.concat[l], dZ, out.grads.gcn_weights[l]);
        if (l == 0) break;  // input features receive no gradient
        Matrix dC;
        matmul_a_bt(dZ, model.gcn_weights[l], dC);
        const std::int64_t dl = model.dims[l];
        Matrix direct(n, dl), propagated(n, dl);
        parallel_for(0, n, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t i = lo; i < hi; ++i) {
                std::copy(dC.row(i), dC.row(i) + dl, direct.row(i));
                std::copy(dC.row(i) + dl, dC.row(i) + 2 * dl, propagated.row(i));
            }
        });
        Matrix back = propagate_transpose(prop, propagated);
        for (std::size_t i = 0; i < direct.data.size(); ++i) direct.data[i] += back.data[i];
        dF = std::move(direct);
    }
    return out;
}

}  // namespace stfc
