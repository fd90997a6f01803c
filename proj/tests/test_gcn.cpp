#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "stfc/gcn.hpp"
#include "stfc/knn.hpp"
#include "stfc/parallel.hpp"
#include "support/helpers.hpp"

using namespace stfc;

namespace {

// Dense reference for the propagation operator: rows of D^-1 (A + I) with
// clamped weights, materialized as a full matrix.
std::vector<std::vector<double>> dense_propagation(const SparseGraph& g) {
    std::vector<std::vector<double>> a(g.n, std::vector<double>(g.n, 0.0));
    for (NodeId u = 0; u < g.n; ++u) {
        a[u][u] = 1.0;
        const auto nbrs = g.neighbors(u);
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            const double w = g.has_weights() ? std::max(0.0, static_cast<double>(g.edge_weights(u)[i])) : 1.0;
            a[u][nbrs[i]] = w;
        }
        double sum = 0.0;
        for (NodeId v = 0; v < g.n; ++v) sum += a[u][v];
        for (NodeId v = 0; v < g.n; ++v) a[u][v] /= sum;
    }
    return a;
}

std::vector<std::vector<double>> dense_product(const std::vector<std::vector<double>>& a,
                                               const Matrix& x) {
    std::vector<std::vector<double>> out(a.size(), std::vector<double>(x.cols, 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < a.size(); ++k)
            for (std::int64_t j = 0; j < x.cols; ++j) out[i][j] += a[i][k] * x(k, j);
    return out;
}

// Fully dense re-implementation of the encoder for small instances.
Matrix dense_forward(const EdgeModel& model, const SparseGraph& g, const FeatureSet& fs) {
    const auto prop = dense_propagation(g);
    Matrix f(fs.n, fs.d);
    for (std::int64_t i = 0; i < fs.n; ++i)
        for (std::int64_t j = 0; j < fs.d; ++j) f(i, j) = fs.data[i * fs.d + j];
    for (const Matrix& w : model.gcn_weights) {
        const auto pf = dense_product(prop, f);
        Matrix z(f.rows, w.cols);
        for (std::int64_t i = 0; i < f.rows; ++i) {
            for (std::int64_t c = 0; c < w.cols; ++c) {
                double acc = 0.0;
                for (std::int64_t j = 0; j < f.cols; ++j) acc += f(i, j) * w(j, c);
                for (std::int64_t j = 0; j < f.cols; ++j) acc += pf[i][j] * w(f.cols + j, c);
                z(i, c) = std::max(0.0, acc);
            }
        }
        f = std::move(z);
    }
    return f;
}

// Unvectorized per-edge scoring oracle.
std::vector<double> scores_oracle(const EdgeModel& model, const Matrix& emb,
                                  const EdgeBatch& batch) {
    const std::int64_t d = emb.cols, h = model.mlp_hidden();
    std::vector<double> out;
    for (const auto& [u, v] : batch.edges) {
        double both = 0.0;
        for (int ord = 0; ord < 2; ++ord) {
            const NodeId a = ord == 0 ? u : v;
            const NodeId b = ord == 0 ? v : u;
            std::vector<double> hidden(h);
            for (std::int64_t j = 0; j < h; ++j) {
                double z = model.mlp_b1[j];
                for (std::int64_t c = 0; c < d; ++c) z += emb(a, c) * model.mlp_w1(c, j);
                for (std::int64_t c = 0; c < d; ++c) z += emb(b, c) * model.mlp_w1(d + c, j);
                hidden[j] = std::max(0.0, z);
            }
            double z0 = model.mlp_b2[0], z1 = model.mlp_b2[1];
            for (std::int64_t j = 0; j < h; ++j) {
                z0 += hidden[j] * model.mlp_w2(j, 0);
                z1 += hidden[j] * model.mlp_w2(j, 1);
            }
            const double m = std::max(z0, z1);
            both += std::exp(z1 - m) / (std::exp(z0 - m) + std::exp(z1 - m));
        }
        out.push_back(both / 2.0);
    }
    return out;
}

struct Instance {
    FeatureSet fs;
    SparseGraph graph;
    EdgeBatch batch;
    EdgeModel model;
};

Instance random_instance(std::uint64_t seed, std::int64_t n = 30, std::int64_t d = 8) {
    Rng rng(seed);
    Instance inst;
    inst.fs = test::random_unit_features(n, d, rng);
    KnnConfig cfg;
    cfg.k = 4;
    inst.graph = build_knn_graph(inst.fs, cfg);
    for (const auto& [u, v] : undirected_edges(inst.graph)) {
        inst.batch.edges.emplace_back(u, v);
        inst.batch.labels.push_back(static_cast<std::uint8_t>(rng.bounded(2)));
    }
    const std::vector<std::int64_t> widths{6, 5};
    inst.model = init_edge_model(d, widths, 7, seed * 31 + 1);
    return inst;
}

// Smallest |pre-activation| over every relu in the network. Central
// differences are only valid when no relu kink lies inside the probe step;
// dead nodes produce exact zeros, so instances are screened on this margin.
double min_kink_distance(const Instance& inst) {
    const auto prop = dense_propagation(inst.graph);
    Matrix f(inst.fs.n, inst.fs.d);
    for (std::int64_t i = 0; i < inst.fs.n; ++i)
        for (std::int64_t j = 0; j < inst.fs.d; ++j) f(i, j) = inst.fs.data[i * inst.fs.d + j];
    double margin = 1e30;
    for (const Matrix& w : inst.model.gcn_weights) {
        const auto pf = dense_product(prop, f);
        Matrix z(f.rows, w.cols);
        for (std::int64_t i = 0; i < f.rows; ++i) {
            for (std::int64_t c = 0; c < w.cols; ++c) {
                double acc = 0.0;
                for (std::int64_t j = 0; j < f.cols; ++j) acc += f(i, j) * w(j, c);
                for (std::int64_t j = 0; j < f.cols; ++j) acc += pf[i][j] * w(f.cols + j, c);
                margin = std::min(margin, std::abs(acc));
                z(i, c) = std::max(0.0, acc);
            }
        }
        f = std::move(z);
    }
    const std::int64_t d = f.cols, h = inst.model.mlp_hidden();
    for (const auto& [u, v] : inst.batch.edges) {
        for (int ord = 0; ord < 2; ++ord) {
            const NodeId a = ord == 0 ? u : v, b = ord == 0 ? v : u;
            for (std::int64_t j = 0; j < h; ++j) {
                double z = inst.model.mlp_b1[j];
                for (std::int64_t c = 0; c < d; ++c) z += f(a, c) * inst.model.mlp_w1(c, j);
                for (std::int64_t c = 0; c < d; ++c) z += f(b, c) * inst.model.mlp_w1(d + c, j);
                margin = std::min(margin, std::abs(z));
            }
        }
    }
    return margin;
}

EdgeModel zero_like(const EdgeModel& m) {
    EdgeModel z = m;
    visit_params(z, [](const std::string&, std::span<double> p) {
        std::fill(p.begin(), p.end(), 0.0);
    });
    return z;
}

}  // namespace

TEST_CASE("propagation rows sum to one") {
    Rng rng(8);
    const FeatureSet fs = test::random_unit_features(60, 8, rng);
    KnnConfig cfg;
    cfg.k = 5;
    const SparseGraph g = build_knn_graph(fs, cfg);
    const PropagationMatrix p = make_propagation(g);
    for (NodeId u = 0; u < g.n; ++u) {
        double sum = 1.0;
        for (std::uint64_t e = g.row_ptr[u]; e < g.row_ptr[u + 1]; ++e) sum += p.edge_weight[e];
        CHECK(sum * p.inv_degree[u] == doctest::Approx(1.0).epsilon(1e-6));
        for (std::uint64_t e = g.row_ptr[u]; e < g.row_ptr[u + 1]; ++e)
            CHECK(p.edge_weight[e] >= 0.0);
    }
}

TEST_CASE("propagate keeps isolated nodes fixed") {
    const SparseGraph g = graph_from_edges(1, {}, true);
    Matrix f(1, 3);
    f(0, 0) = 2.5;
    f(0, 1) = -1.0;
    f(0, 2) = 0.25;
    const Matrix out = propagate(g, f);
    CHECK(out(0, 0) == 2.5);
    CHECK(out(0, 1) == -1.0);
    CHECK(out(0, 2) == 0.25);
}

TEST_CASE("propagate averages across a single binary edge") {
    std::vector<std::pair<NodeId, NodeId>> edges{{0, 1}};
    const SparseGraph g = graph_from_edges(2, edges, true);
    Matrix f(2, 1);
    f(0, 0) = 1.0;
    f(1, 0) = -1.0;
    const Matrix out = propagate(g, f);
    CHECK(out(0, 0) == doctest::Approx(0.0));
    CHECK(out(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("propagate matches the dense oracle") {
    Rng rng(21);
    const SparseGraph g = test::random_symmetric_graph(50, 0.1, rng);
    Matrix f(50, 6);
    for (double& v : f.data) v = rng.gaussian();
    const Matrix got = propagate(g, f);
    const auto want = dense_product(dense_propagation(g), f);
    for (std::int64_t i = 0; i < 50; ++i)
        for (std::int64_t j = 0; j < 6; ++j)
            CHECK(got(i, j) == doctest::Approx(want[i][j]).epsilon(1e-10));
}

TEST_CASE("single-layer forward, hand computed") {
    std::vector<std::pair<NodeId, NodeId>> edges{{0, 1}};
    const SparseGraph g = graph_from_edges(2, edges, true);
    FeatureSet fs{2, 1, {1.f, -1.f}};

    EdgeModel m = init_edge_model(1, std::vector<std::int64_t>{1}, 2, 0);
    m.gcn_weights[0](0, 0) = 1.0;
    m.gcn_weights[0](1, 0) = 1.0;
    const ForwardTrace trace = gcn_forward(m, g, fs);
    // concat rows [1, 0] and [-1, 0]; pre-activation [1, -1]; relu
    CHECK(trace.embeddings()(0, 0) == doctest::Approx(1.0));
    CHECK(trace.embeddings()(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("zero weights give all-zero embeddings and 0.5 scores") {
    const Instance inst = random_instance(4);
    const EdgeModel zero = zero_like(inst.model);
    const ForwardTrace trace = gcn_forward(zero, inst.graph, inst.fs);
    for (double v : trace.embeddings().data) CHECK(v == 0.0);
    const auto scores = edge_scores(zero, trace, inst.batch);
    for (double s : scores) CHECK(s == doctest::Approx(0.5));
    // uniform softmax: cross-entropy is ln 2 regardless of labels
    const LossGrads lg = loss_and_grads(zero, inst.graph, inst.fs, inst.batch);
    CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("forward matches a dense reimplementation") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Instance inst = random_instance(seed, 25, 6);
        const ForwardTrace trace = gcn_forward(inst.model, inst.graph, inst.fs);
        const Matrix want = dense_forward(inst.model, inst.graph, inst.fs);
        REQUIRE(trace.embeddings().rows == want.rows);
        for (std::size_t i = 0; i < want.data.size(); ++i)
            CHECK(trace.embeddings().data[i] == doctest::Approx(want.data[i]).epsilon(1e-10));
    }
}

TEST_CASE("edge scores match the scalar-loop oracle and stay in (0,1)") {
    const Instance inst = random_instance(17, 20, 6);
    const ForwardTrace trace = gcn_forward(inst.model, inst.graph, inst.fs);
    const auto got = edge_scores(inst.model, trace, inst.batch);
    const auto want = scores_oracle(inst.model, trace.embeddings(), inst.batch);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
        CHECK(got[i] > 0.0);
        CHECK(got[i] < 1.0);
    }
}

TEST_CASE("scores are symmetric in edge orientation") {
    const Instance inst = random_instance(23, 20, 6);
    const ForwardTrace trace = gcn_forward(inst.model, inst.graph, inst.fs);
    EdgeBatch flipped = inst.batch;
    for (auto& [u, v] : flipped.edges) std::swap(u, v);
    const auto a = edge_scores(inst.model, trace, inst.batch);
    const auto b = edge_scores(inst.model, trace, flipped);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
}

TEST_CASE("analytic gradients match central finite differences") {
    int accepted = 0;
    for (std::uint64_t seed = 11; accepted < 3; ++seed) {
        REQUIRE(seed < 100);  // screening must not starve
        Instance inst = random_instance(seed);
        if (min_kink_distance(inst) < 1e-3) continue;
        ++accepted;
        const LossGrads lg = loss_and_grads(inst.model, inst.graph, inst.fs, inst.batch);

        std::vector<std::span<double>> param_views;
        visit_params(inst.model, [&](const std::string&, std::span<double> p) {
            param_views.push_back(p);
        });
        std::vector<std::span<const double>> grad_views;
        visit_params(lg.grads,
                     [&](const std::string&, std::span<const double> p) { grad_views.push_back(p); });

        const double step = 1e-5;
        for (std::size_t t = 0; t < param_views.size(); ++t) {
            for (std::size_t i = 0; i < param_views[t].size(); ++i) {
                double& theta = param_views[t][i];
                const double saved = theta;
                theta = saved + step;
                const double up = loss_and_grads(inst.model, inst.graph, inst.fs, inst.batch).loss;
                theta = saved - step;
                const double down = loss_and_grads(inst.model, inst.graph, inst.fs, inst.batch).loss;
                theta = saved;
                const double fd = (up - down) / (2 * step);
                const double an = grad_views[t][i];
                const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
                CHECK(rel < 1e-4);
            }
        }
    }
}

TEST_CASE("batch order only perturbs grads at summation-order level") {
    Instance inst = random_instance(31, 24, 6);
    const LossGrads a = loss_and_grads(inst.model, inst.graph, inst.fs, inst.batch);

    EdgeBatch reversed;
    for (std::size_t i = inst.batch.edges.size(); i-- > 0;) {
        reversed.edges.push_back(inst.batch.edges[i]);
        reversed.labels.push_back(inst.batch.labels[i]);
    }
    const LossGrads b = loss_and_grads(inst.model, inst.graph, inst.fs, reversed);
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-10));

    std::vector<double> flat_a, flat_b;
    visit_params(a.grads,
                 [&](const std::string&, std::span<const double> p) {
                     flat_a.insert(flat_a.end(), p.begin(), p.end());
                 });
    visit_params(b.grads,
                 [&](const std::string&, std::span<const double> p) {
                     flat_b.insert(flat_b.end(), p.begin(), p.end());
                 });
    REQUIRE(flat_a.size() == flat_b.size());
    for (std::size_t i = 0; i < flat_a.size(); ++i)
        CHECK(flat_a[i] == doctest::Approx(flat_b[i]).epsilon(1e-10));
}

TEST_CASE("shape and batch errors") {
    const Instance inst = random_instance(41);
    FeatureSet wrong = inst.fs;
    wrong.d += 1;
    wrong.data.resize(wrong.n * wrong.d);
    CHECK_THROWS_AS(gcn_forward(inst.model, inst.graph, wrong), Error);

    EdgeBatch empty;
    CHECK_THROWS_AS(loss_and_grads(inst.model, inst.graph, inst.fs, empty), Error);

    EdgeBatch oob = inst.batch;
    oob.edges[0] = {0, static_cast<NodeId>(inst.fs.n + 5)};
    CHECK_THROWS_AS(loss_and_grads(inst.model, inst.graph, inst.fs, oob), Error);
}

TEST_CASE("loss and grads are identical across thread counts") {
    Instance inst = random_instance(55, 40, 8);
    set_num_threads(1);
    const LossGrads a = loss_and_grads(inst.model, inst.graph, inst.fs, inst.batch);
    set_num_threads(4);
    const LossGrads b = loss_and_grads(inst.model, inst.graph, inst.fs, inst.batch);
    set_num_threads(0);
    CHECK(a.loss == b.loss);
    std::vector<double> flat_a, flat_b;
    visit_params(a.grads,
                 [&](const std::string&, std::span<const double> p) {
                     flat_a.insert(flat_a.end(), p.begin(), p.end());
                 });
    visit_params(b.grads,
                 [&](const std::string&, std::span<const double> p) {
                     flat_b.insert(flat_b.end(), p.begin(), p.end());
                 });
    CHECK(flat_a == flat_b);
}
