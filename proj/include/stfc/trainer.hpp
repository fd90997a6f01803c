#pragma once

#include <string>
#include <vector>

#include "stfc/core.hpp"
#include "stfc/knn.hpp"

namespace stfc {

struct TrainConfig {
    std::int64_t iterations = 500;
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-5;
    // Step schedule: lr is multiplied by lr_decay_factor every lr_decay_every
    // iterations; 0 disables the schedule.
    double lr_decay_factor = 0.1;
    std::int64_t lr_decay_every = 0;
    std::uint64_t seed = 0;
    SampleSpec sample_spec;
    KnnConfig knn_cfg;
    // Parity mode: one batch = every edge of the full training graph, no
    // sampling. For small instances only.
    bool whole_graph = false;
};

struct TrainResult {
    EdgeModel model;
    std::vector<double> loss_history;  // one entry per completed step
    bool diverged = false;             // true when a step produced a non-finite loss;
                                       // model holds the last good parameters
};

// SGD with momentum over one SPSS subgraph per step. Deterministic given the
// seeds in cfg, for any thread count.
TrainResult train(const FeatureSet& fs, const Partition& gt, EdgeModel model,
                  const TrainConfig& cfg);

// Checkpointing (io model format).
void checkpoint(const EdgeModel& model, const std::string& path);
EdgeModel restore(const std::string& path);

// Writes "step,loss" CSV.
void write_loss_history(const std::vector<double>& losses, const std::string& path);

}  // namespace stfc
