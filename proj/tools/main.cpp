// stfc command line: gen | knn | train | infer | eval | bench-ni
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.
// Logs go to stderr; data goes to files (bench-ni prints its table to stdout).

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stfc/core.hpp"
#include "stfc/gcn.hpp"
#include "stfc/inference.hpp"
#include "stfc/io.hpp"
#include "stfc/knn.hpp"
#include "stfc/metrics.hpp"
#include "stfc/parallel.hpp"
#include "stfc/rng.hpp"
#include "stfc/synth.hpp"
#include "stfc/trainer.hpp"

namespace {

int g_log_level = 2;  // 0 error, 1 warn, 2 info, 3 debug

void logf(int level, const char* tag, const char* fmt, ...) {
    if (level > g_log_level) return;
    std::fprintf(stderr, "[%s] ", tag);
    va_list args;
    va_start(args, fmt);
    std::vfprintf(stderr, fmt, args);
    va_end(args);
    std::fputc('\n', stderr);
}

#define LOG_ERROR(...) logf(0, "error", __VA_ARGS__)
#define LOG_WARN(...) logf(1, "warn", __VA_ARGS__)
#define LOG_INFO(...) logf(2, "info", __VA_ARGS__)

stfc::FeatureSet load_features(const std::string& path) {
    stfc::FeatureSet fs = stfc::io::read_features(path);
    // Input embeddings are normalized at load time rather than trusted.
    stfc::normalize_rows(fs);
    const auto v = stfc::validate_feature_set(fs);
    if (!v.ok) throw stfc::Error(v.code, "invalid feature file " + path);
    return fs;
}

struct GenArgs {
    std::int64_t classes = 50;
    std::int64_t per_class_min = 20;
    std::int64_t per_class_max = 40;
    std::int64_t dim = 64;
    double noise = 0.1;
    double overlap = 0.0;
    std::string out_features, out_labels;
};

struct KnnArgs {
    std::string features;
    std::int64_t k = 80;
    bool no_symmetrize = false;
    std::string out_edges;
};

struct TrainArgs {
    std::string features, labels;
    std::int64_t k = 80;
    std::int64_t m = 2;
    std::int64_t n_neighbors = 750;
    std::int64_t k1 = 1300;
    double k2 = 0.9;
    std::int64_t iters = 500;
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-5;
    std::int64_t lr_decay_every = -1;  // -1: once at the halfway point
    double lr_decay_factor = 0.1;
    std::vector<std::int64_t> gcn_widths = {512, 256};
    std::int64_t mlp_hidden = 128;
    bool whole_graph = false;
    std::string out_model, out_loss;
};

struct InferArgs {
    std::string features, model;
    std::int64_t k = 80;
    double tau1 = 0.7;
    double tau2 = 0.72;
    std::string agg = "max";
    bool skip_parsing = false;
    bool skip_refinement = false;
    std::string out_labels;
};

struct EvalArgs {
    std::string pred, gt, out_report;
};

struct BenchArgs {
    std::vector<std::int64_t> nodes = {10000, 20000, 40000};
    double avg_degree = 20.0;
    int repeats = 3;
};

int run_gen(const GenArgs& a, std::uint64_t seed) {
    stfc::synth::SynthConfig cfg;
    cfg.num_classes = a.classes;
    cfg.per_class_min = a.per_class_min;
    cfg.per_class_max = a.per_class_max;
    cfg.dim = a.dim;
    cfg.noise_scale = a.noise;
    cfg.overlap_scale = a.overlap;
    cfg.seed = seed;
    auto [fs, gt] = stfc::synth::generate(cfg);
    stfc::io::write_features(fs, a.out_features);
    stfc::io::write_labels(gt, a.out_labels);
    LOG_INFO("generated %lld samples, %lld classes, dim %lld", static_cast<long long>(fs.n),
             static_cast<long long>(gt.num_clusters), static_cast<long long>(fs.d));
    return 0;
}

int run_knn(const KnnArgs& a) {
    const stfc::FeatureSet fs = load_features(a.features);
    stfc::KnnConfig cfg;
    cfg.k = a.k;
    cfg.symmetrize = !a.no_symmetrize;
    const stfc::SparseGraph g = stfc::build_knn_graph(fs, cfg);
    std::uint64_t min_deg = g.n ? g.degree(0) : 0, max_deg = 0;
    for (stfc::NodeId u = 0; u < g.n; ++u) {
        min_deg = std::min(min_deg, g.degree(u));
        max_deg = std::max(max_deg, g.degree(u));
    }
    LOG_INFO("knn graph: %u nodes, %llu edge slots, degree range [%llu, %llu]", g.n,
             static_cast<unsigned long long>(g.num_edge_slots()),
             static_cast<unsigned long long>(min_deg), static_cast<unsigned long long>(max_deg));
    if (!a.out_edges.empty()) {
        std::FILE* f = std::fopen(a.out_edges.c_str(), "wb");
        if (!f) throw stfc::Error(stfc::ErrorCode::IoError, "cannot open " + a.out_edges);
        for (stfc::NodeId u = 0; u < g.n; ++u) {
            const auto nbrs = g.neighbors(u);
            const auto w = g.edge_weights(u);
            for (std::size_t i = 0; i < nbrs.size(); ++i)
                std::fprintf(f, "%u %u %.9g\n", u, nbrs[i], static_cast<double>(w[i]));
        }
        std::fclose(f);
    }
    return 0;
}

int run_train(const TrainArgs& a, std::uint64_t seed) {
    const stfc::FeatureSet fs = load_features(a.features);
    const stfc::Partition gt = stfc::io::read_labels(a.labels);
    if (static_cast<std::int64_t>(gt.labels.size()) != fs.n)
        throw stfc::Error(stfc::ErrorCode::LengthMismatch,
                          "feature/label counts differ: " + std::to_string(fs.n) + " vs " +
                              std::to_string(gt.labels.size()));

    stfc::TrainConfig cfg;
    cfg.iterations = a.iters;
    cfg.lr = a.lr;
    cfg.momentum = a.momentum;
    cfg.weight_decay = a.weight_decay;
    cfg.lr_decay_factor = a.lr_decay_factor;
    cfg.lr_decay_every = a.lr_decay_every >= 0 ? a.lr_decay_every : std::max<std::int64_t>(1, a.iters / 2);
    cfg.seed = seed;
    cfg.sample_spec.m = a.m;
    cfg.sample_spec.n_neighbors = a.n_neighbors;
    cfg.sample_spec.k1 = a.k1;
    cfg.sample_spec.k2_frac = a.k2;
    cfg.sample_spec.seed = stfc::mix_seed(seed, 2);
    cfg.knn_cfg.k = a.k;
    cfg.whole_graph = a.whole_graph;

    stfc::EdgeModel model =
        stfc::init_edge_model(fs.d, a.gcn_widths, a.mlp_hidden, stfc::mix_seed(seed, 1));
    LOG_INFO("training: %lld iterations, lr %g, %zu-layer gcn", static_cast<long long>(a.iters),
             a.lr, a.gcn_widths.size());

    const stfc::TrainResult result = stfc::train(fs, gt, std::move(model), cfg);
    if (result.diverged)
        LOG_WARN("loss diverged after %zu steps; checkpoint holds the last good parameters",
                 result.loss_history.size());
    if (a.lr == 0.0) LOG_WARN("lr is 0; the model was not updated");
    if (!result.loss_history.empty())
        LOG_INFO("final loss %.6f", result.loss_history.back());

    stfc::checkpoint(result.model, a.out_model);
    if (!a.out_loss.empty()) stfc::write_loss_history(result.loss_history, a.out_loss);
    return result.diverged ? 2 : 0;
}

int run_infer(const InferArgs& a) {
    const stfc::FeatureSet fs = load_features(a.features);
    const stfc::EdgeModel model = stfc::restore(a.model);
    stfc::KnnConfig knn_cfg;
    knn_cfg.k = a.k;
    stfc::InferConfig cfg;
    cfg.tau1 = a.tau1;
    cfg.tau2 = a.tau2;
    cfg.aggregation = stfc::parse_aggregation(a.agg);
    cfg.skip_parsing = a.skip_parsing;
    cfg.skip_refinement = a.skip_refinement;
    const stfc::Partition pred = stfc::cluster(fs, model, knn_cfg, cfg);
    stfc::io::write_partition(pred, a.out_labels);
    LOG_INFO("clustered %zu nodes into %lld clusters", pred.labels.size(),
             static_cast<long long>(pred.num_clusters));
    return 0;
}

int run_eval(const EvalArgs& a) {
    const stfc::Partition pred = stfc::io::read_labels(a.pred);
    const stfc::Partition gt = stfc::io::read_labels(a.gt);
    if (pred.labels.size() != gt.labels.size())
        throw stfc::Error(stfc::ErrorCode::LengthMismatch,
                          "pred/gt label counts differ: " + std::to_string(pred.labels.size()) +
                              " vs " + std::to_string(gt.labels.size()));
    const stfc::EvalReport report = stfc::evaluate(pred, gt);
    const std::string json = stfc::report_to_json(report);
    std::FILE* f = std::fopen(a.out_report.c_str(), "wb");
    if (!f) throw stfc::Error(stfc::ErrorCode::IoError, "cannot open " + a.out_report);
    std::fwrite(json.data(), 1, json.size(), f);
    std::fclose(f);
    LOG_INFO("pairwise f %.4f, bcubed f %.4f, nmi %.4f", report.pairwise.f, report.bcubed.f,
             report.nmi);
    return 0;
}

int run_bench(const BenchArgs& a, std::uint64_t seed) {
    std::printf("%-10s %-12s %-10s %-14s %s\n", "nodes", "edges", "repeats", "median_sec",
                "ns_per_edge");
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        const auto n = static_cast<stfc::NodeId>(a.nodes[i]);
        const stfc::SparseGraph g =
            stfc::synth::erdos_renyi_graph(n, a.avg_degree, stfc::mix_seed(seed, i));
        std::vector<double> times;
        for (int r = 0; r < a.repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto ni = stfc::node_intimacy(g, stfc::Aggregation::Max);
            const auto t1 = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double>(t1 - t0).count());
            if (ni.values.empty()) LOG_WARN("graph with no edges");
        }
        std::sort(times.begin(), times.end());
        const double median = times[times.size() / 2];
        const double edges = static_cast<double>(g.num_edge_slots()) / 2.0;
        std::printf("%-10u %-12.0f %-10d %-14.6f %.2f\n", n, edges, a.repeats, median,
                    1e9 * median / edges);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph-based feature clustering toolkit"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    int threads = 0;
    std::string log_level = "info";
    app.add_option("--seed", seed, "Global RNG seed");
    app.add_option("--threads", threads, "Worker threads (0 = hardware)");
    app.add_option("--log-level", log_level, "error|warn|info|debug")
        ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

    GenArgs gen;
    auto* cgen = app.add_subcommand("gen", "Generate synthetic features and labels");
    cgen->add_option("--classes", gen.classes);
    cgen->add_option("--per-class-min", gen.per_class_min);
    cgen->add_option("--per-class-max", gen.per_class_max);
    cgen->add_option("--dim", gen.dim);
    cgen->add_option("--noise", gen.noise);
    cgen->add_option("--overlap", gen.overlap);
    cgen->add_option("--out-features", gen.out_features)->required();
    cgen->add_option("--out-labels", gen.out_labels)->required();

    KnnArgs knn;
    auto* cknn = app.add_subcommand("knn", "Build the KNN affinity graph");
    cknn->add_option("--features", knn.features)->required();
    cknn->add_option("--k", knn.k);
    cknn->add_flag("--no-symmetrize", knn.no_symmetrize);
    cknn->add_option("--out-edges", knn.out_edges, "Optional edge list dump (u v weight)");

    TrainArgs train;
    auto* ctrain = app.add_subcommand("train", "Train the edge confidence model");
    ctrain->add_option("--features", train.features)->required();
    ctrain->add_option("--labels", train.labels)->required();
    ctrain->add_option("--k", train.k);
    ctrain->add_option("--m", train.m);
    ctrain->add_option("--n-neighbors", train.n_neighbors);
    ctrain->add_option("--k1", train.k1);
    ctrain->add_option("--k2", train.k2);
    ctrain->add_option("--iters", train.iters);
    ctrain->add_option("--lr", train.lr);
    ctrain->add_option("--momentum", train.momentum);
    ctrain->add_option("--weight-decay", train.weight_decay);
    ctrain->add_option("--lr-decay-every", train.lr_decay_every);
    ctrain->add_option("--lr-decay-factor", train.lr_decay_factor);
    ctrain->add_option("--gcn-widths", train.gcn_widths)->delimiter(',');
    ctrain->add_option("--mlp-hidden", train.mlp_hidden);
    ctrain->add_flag("--whole-graph", train.whole_graph, "Disable sampling (small data only)");
    ctrain->add_option("--out-model", train.out_model)->required();
    ctrain->add_option("--out-loss", train.out_loss, "Loss history CSV");

    InferArgs infer;
    auto* cinfer = app.add_subcommand("infer", "Cluster features with a trained model");
    cinfer->add_option("--features", infer.features)->required();
    cinfer->add_option("--model", infer.model)->required();
    cinfer->add_option("--k", infer.k);
    cinfer->add_option("--tau1", infer.tau1);
    cinfer->add_option("--tau2", infer.tau2);
    cinfer->add_option("--agg", infer.agg)->check(CLI::IsMember({"max", "mean", "min", "jaccard"}));
    cinfer->add_flag("--skip-parsing", infer.skip_parsing);
    cinfer->add_flag("--skip-refinement", infer.skip_refinement);
    cinfer->add_option("--out-labels", infer.out_labels)->required();

    EvalArgs eval;
    auto* ceval = app.add_subcommand("eval", "Score a predicted clustering");
    ceval->add_option("--pred", eval.pred)->required();
    ceval->add_option("--gt", eval.gt)->required();
    ceval->add_option("--out-report", eval.out_report)->required();

    BenchArgs bench;
    auto* cbench = app.add_subcommand("bench-ni", "Node intimacy scaling benchmark");
    cbench->add_option("--nodes", bench.nodes)->delimiter(',');
    cbench->add_option("--avg-degree", bench.avg_degree);
    cbench->add_option("--repeats", bench.repeats);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    g_log_level = log_level == "error" ? 0 : log_level == "warn" ? 1 : log_level == "debug" ? 3 : 2;
    stfc::set_num_threads(threads);

    try {
        if (cgen->parsed()) return run_gen(gen, seed);
        if (cknn->parsed()) return run_knn(knn);
        if (ctrain->parsed()) return run_train(train, seed);
        if (cinfer->parsed()) return run_infer(infer);
        if (ceval->parsed()) return run_eval(eval);
        if (cbench->parsed()) return run_bench(bench, seed);
    } catch (const stfc::Error& e) {
        LOG_ERROR("%s", e.what());
        return 2;
    } catch (const std::exception& e) {
        LOG_ERROR("%s", e.what());
        return 2;
    }
    return 0;
}
