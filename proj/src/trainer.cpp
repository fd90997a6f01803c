#include "stfc/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "stfc/gcn.hpp"
#include "stfc/io.hpp"
#include "stfc/rng.hpp"
#include "stfc/sampler.hpp"

namespace stfc {

namespace {

struct Momentum {
    EdgeModel buf;  // same shapes as the model, zero-initialized

    explicit Momentum(const EdgeModel& m) {
        buf.dims = m.dims;
        for (const Matrix& w : m.gcn_weights) buf.gcn_weights.emplace_back(w.rows, w.cols);
        buf.mlp_w1 = Matrix(m.mlp_w1.rows, m.mlp_w1.cols);
        buf.mlp_b1.assign(m.mlp_b1.size(), 0.0);
        buf.mlp_w2 = Matrix(m.mlp_w2.rows, m.mlp_w2.cols);
        buf.mlp_b2.assign(m.mlp_b2.size(), 0.0);
    }
};

void sgd_step(EdgeModel& model, const EdgeModel& grads, Momentum& mom, double lr,
              double momentum, double weight_decay) {
    auto update = [&](std::span<double> w, std::span<const double> g, std::span<double> v) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double grad = g[i] + weight_decay * w[i];
            v[i] = momentum * v[i] + grad;
            w[i] -= lr * v[i];
        }
    };
    for (std::size_t l = 0; l < model.gcn_weights.size(); ++l)
        update(model.gcn_weights[l].data, grads.gcn_weights[l].data, mom.buf.gcn_weights[l].data);
    update(model.mlp_w1.data, grads.mlp_w1.data, mom.buf.mlp_w1.data);
    update(model.mlp_b1, grads.mlp_b1, mom.buf.mlp_b1);
    update(model.mlp_w2.data, grads.mlp_w2.data, mom.buf.mlp_w2.data);
    update(model.mlp_b2, grads.mlp_b2, mom.buf.mlp_b2);
}

}  // namespace

TrainResult train(const FeatureSet& fs, const Partition& gt, EdgeModel model,
                  const TrainConfig& cfg) {
    if (cfg.iterations < 1) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 1");
    if (cfg.lr < 0.0) throw Error(ErrorCode::InvalidArgument, "negative learning rate");
    if (static_cast<std::int64_t>(gt.labels.size()) != fs.n)
        throw Error(ErrorCode::LengthMismatch, "labels vs features");
    check_model_shapes(model);
    if (model.input_dim() != fs.d)
        throw Error(ErrorCode::ShapeMismatch, "model input width != feature width");

    const ClusterIndex idx = build_cluster_index(fs, gt);

    // Whole-graph mode reuses one fixed batch; otherwise each step draws a
    // fresh subgraph from its own RNG sub-stream.
    SampledSubgraph whole;
    EdgeBatch whole_batch;
    if (cfg.whole_graph) {
        std::vector<NodeId> all(fs.n);
        for (std::int64_t i = 0; i < fs.n; ++i) all[i] = static_cast<NodeId>(i);
        SampleSpec everything;
        everything.m = idx.num_clusters();
        everything.n_neighbors = 0;
        everything.k1 = idx.num_clusters();
        everything.k2_frac = 1.0;
        everything.seed = cfg.seed;
        whole = sample_subgraph(idx, fs, everything, cfg.knn_cfg);
        whole_batch = edge_label_batch(whole);
    }

    TrainResult result;
    result.loss_history.reserve(cfg.iterations);
    Momentum mom(model);
    EdgeModel last_good = model;

    for (std::int64_t step = 0; step < cfg.iterations; ++step) {
        double lr = cfg.lr;
        if (cfg.lr_decay_every > 0) {
            const std::int64_t decays = step / cfg.lr_decay_every;
            for (std::int64_t i = 0; i < decays; ++i) lr *= cfg.lr_decay_factor;
        }

        double loss;
        if (cfg.whole_graph) {
            const LossGrads lg = loss_and_grads(model, whole.graph, whole.features, whole_batch);
            loss = lg.loss;
            if (std::isfinite(loss)) sgd_step(model, lg.grads, mom, lr, cfg.momentum, cfg.weight_decay);
        } else {
            SampleSpec spec = cfg.sample_spec;
            spec.seed = mix_seed(cfg.sample_spec.seed, static_cast<std::uint64_t>(step));
            const SampledSubgraph sub = sample_subgraph(idx, fs, spec, cfg.knn_cfg);
            const EdgeBatch batch = edge_label_batch(sub);
            const LossGrads lg = loss_and_grads(model, sub.graph, sub.features, batch);
            loss = lg.loss;
            if (std::isfinite(loss)) sgd_step(model, lg.grads, mom, lr, cfg.momentum, cfg.weight_decay);
        }

        if (!std::isfinite(loss) || !model_is_finite(model)) {
            result.model = std::move(last_good);
            result.diverged = true;
            return result;
        }
        result.loss_history.push_back(loss);
        last_good = model;
    }
    result.model = std::move(model);
    return result;
}

void checkpoint(const EdgeModel& model, const std::string& path) { io::write_model(model, path); }

EdgeModel restore(const std::string& path) { return io::read_model(path); }

void write_loss_history(const std::vector<double>& losses, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot open for writing: " + path);
    out << "step,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < losses.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, losses[i]);
        out << buf;
    }
    if (!out) throw Error(ErrorCode::IoError, "write failed");
}

}  // namespace stfc
