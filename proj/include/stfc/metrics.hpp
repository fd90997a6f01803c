#pragma once

#include <string>

#include "stfc/core.hpp"

namespace stfc {

struct PrecisionRecallF {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
};

struct EvalReport {
    PrecisionRecallF pairwise;
    PrecisionRecallF bcubed;
    double nmi = 0.0;
    std::int64_t n = 0;
    std::int64_t pred_clusters = 0;
    std::int64_t gt_clusters = 0;
};

// Pair counting runs over per-cluster contingency counts in exact integer
// arithmetic, never over the O(n^2) pair set. Zero denominators score 0.
PrecisionRecallF pairwise_f(const Partition& pred, const Partition& gt);

PrecisionRecallF bcubed_f(const Partition& pred, const Partition& gt);

// Mutual information normalized by sqrt(H(pred) * H(gt)); 1.0 for identical
// partitions, 0.0 when either entropy is zero and the partitions differ.
double nmi(const Partition& pred, const Partition& gt);

EvalReport evaluate(const Partition& pred, const Partition& gt);

// JSON with the fixed key schema used by the CLI eval report.
std::string report_to_json(const EvalReport& r);

}  // namespace stfc
