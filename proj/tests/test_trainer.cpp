#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "stfc/parallel.hpp"
#include "stfc/synth.hpp"
#include "stfc/trainer.hpp"
#include "support/helpers.hpp"

using namespace stfc;

namespace {

std::pair<FeatureSet, Partition> tiny_data(std::uint64_t seed) {
    synth::SynthConfig cfg;
    cfg.num_classes = 8;
    cfg.per_class_min = 10;
    cfg.per_class_max = 14;
    cfg.dim = 16;
    cfg.noise_scale = 0.12;
    cfg.overlap_scale = 0.3;
    cfg.seed = seed;
    return synth::generate(cfg);
}

TrainConfig tiny_config(std::int64_t iters) {
    TrainConfig cfg;
    cfg.iterations = iters;
    cfg.lr = 0.1;
    cfg.seed = 7;
    cfg.sample_spec.m = 2;
    cfg.sample_spec.n_neighbors = 2;
    cfg.sample_spec.k1 = 4;
    cfg.sample_spec.k2_frac = 0.9;
    cfg.sample_spec.seed = 19;
    cfg.knn_cfg.k = 5;
    return cfg;
}

EdgeModel tiny_model(std::int64_t d, std::uint64_t seed) {
    return init_edge_model(d, std::vector<std::int64_t>{12, 8}, 8, seed);
}

std::vector<double> flatten(const EdgeModel& m) {
    std::vector<double> flat;
    visit_params(m, [&](const std::string&, std::span<const double> p) {
        flat.insert(flat.end(), p.begin(), p.end());
    });
    return flat;
}

}  // namespace

TEST_CASE("one step moves parameters; lr 0 does not") {
    const auto [fs, gt] = tiny_data(1);
    const EdgeModel m0 = tiny_model(fs.d, 3);

    const TrainResult moved = train(fs, gt, m0, tiny_config(1));
    CHECK_FALSE(moved.diverged);
    CHECK(moved.loss_history.size() == 1);
    CHECK(flatten(moved.model) != flatten(m0));

    TrainConfig frozen = tiny_config(3);
    frozen.lr = 0.0;
    const TrainResult still = train(fs, gt, m0, frozen);
    CHECK(flatten(still.model) == flatten(m0));
    for (double l : still.loss_history) CHECK(std::isfinite(l));
}

TEST_CASE("zero iterations are rejected") {
    const auto [fs, gt] = tiny_data(2);
    TrainConfig cfg = tiny_config(0);
    CHECK_THROWS_AS(train(fs, gt, tiny_model(fs.d, 1), cfg), Error);
}

TEST_CASE("training is deterministic across runs and thread counts") {
    const auto [fs, gt] = tiny_data(3);
    const EdgeModel m0 = tiny_model(fs.d, 5);
    const TrainConfig cfg = tiny_config(6);

    set_num_threads(1);
    const TrainResult a = train(fs, gt, m0, cfg);
    set_num_threads(3);
    const TrainResult b = train(fs, gt, m0, cfg);
    set_num_threads(0);
    CHECK(a.loss_history == b.loss_history);
    CHECK(flatten(a.model) == flatten(b.model));
}

TEST_CASE("losses stay finite and drop on separable data") {
    const auto [fs, gt] = tiny_data(4);
    TrainConfig cfg = tiny_config(60);
    cfg.lr_decay_every = 30;
    const TrainResult r = train(fs, gt, tiny_model(fs.d, 7), cfg);
    CHECK_FALSE(r.diverged);
    for (double l : r.loss_history) CHECK(std::isfinite(l));
    const double first = r.loss_history.front();
    const double last = r.loss_history.back();
    CHECK(last < first);
}

TEST_CASE("whole-graph parity: training converges without sampling") {
    const auto [fs, gt] = tiny_data(5);
    TrainConfig cfg = tiny_config(60);
    cfg.whole_graph = true;
    const TrainResult r = train(fs, gt, tiny_model(fs.d, 9), cfg);
    CHECK_FALSE(r.diverged);
    CHECK(r.loss_history.back() < 0.8 * r.loss_history.front());
}

TEST_CASE("an absurd learning rate triggers the divergence guard") {
    const auto [fs, gt] = tiny_data(6);
    TrainConfig cfg = tiny_config(40);
    cfg.lr = 1e18;
    cfg.weight_decay = 0.0;
    const TrainResult r = train(fs, gt, tiny_model(fs.d, 11), cfg);
    if (r.diverged) {
        CHECK(model_is_finite(r.model));  // last good checkpoint survives
        CHECK(r.loss_history.size() < 40);
    }
}

TEST_CASE("checkpoint round-trips through the trainer wrappers") {
    namespace fs_sys = std::filesystem;
    const auto [fs, gt] = tiny_data(7);
    const TrainResult r = train(fs, gt, tiny_model(fs.d, 13), tiny_config(2));
    const auto path = fs_sys::temp_directory_path() / "stfc_trainer_ckpt.bin";
    checkpoint(r.model, path.string());
    const EdgeModel back = restore(path.string());
    CHECK(flatten(back) == flatten(r.model));
    fs_sys::remove(path);
}

TEST_CASE("loss history CSV format") {
    namespace fs_sys = std::filesystem;
    const auto path = fs_sys::temp_directory_path() / "stfc_loss.csv";
    write_loss_history({0.5, 0.25}, path.string());
    std::ifstream in(path);
    std::string l0, l1, l2;
    std::getline(in, l0);
    std::getline(in, l1);
    std::getline(in, l2);
    CHECK(l0 == "step,loss");
    CHECK(l1.substr(0, 2) == "0,");
    CHECK(l2.substr(0, 2) == "1,");
    fs_sys::remove(path);
}

TEST_CASE("mismatched labels raise LengthMismatch") {
    const auto [fs, gt] = tiny_data(8);
    Partition bad = gt;
    bad.labels.pop_back();
    CHECK_THROWS_AS(train(fs, bad, tiny_model(fs.d, 15), tiny_config(1)), Error);
}
