#pragma once

#include <utility>

#include "stfc/core.hpp"

namespace stfc::synth {

struct SynthConfig {
    std::int64_t num_classes = 50;
    std::int64_t per_class_min = 20;
    std::int64_t per_class_max = 40;
    std::int64_t dim = 64;
    double noise_scale = 0.1;    // within-class gaussian scale before renormalization
    double overlap_scale = 0.0;  // contraction of class centers toward their common mean, [0, 1)
    std::uint64_t seed = 0;
};

// Draws one unit center per class on the sphere (optionally contracted toward
// the normalized mean of all centers), then perturbs members with gaussian
// noise and renormalizes. Deterministic per seed.
std::pair<FeatureSet, Partition> generate(const SynthConfig& cfg);

// Symmetric binary Erdos-Renyi-style graph with the given expected average
// degree; used by benchmarks and scaling tests.
SparseGraph erdos_renyi_graph(NodeId n, double avg_degree, std::uint64_t seed);

}  // namespace stfc::synth
