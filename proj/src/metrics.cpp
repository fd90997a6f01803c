#include "stfc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <json.hpp>

namespace stfc {

namespace {

struct Contingency {
    std::int64_t n = 0;
    std::vector<std::uint64_t> pred_sizes;
    std::vector<std::uint64_t> gt_sizes;
    // (pred cluster, gt cluster) -> overlap count; only non-empty cells
    std::unordered_map<std::uint64_t, std::uint64_t> cells;
    std::int64_t pred_k = 0, gt_k = 0;

    std::uint64_t key(std::int64_t p, std::int64_t g) const {
        return static_cast<std::uint64_t>(p) * static_cast<std::uint64_t>(gt_k) +
               static_cast<std::uint64_t>(g);
    }
};

Contingency build_contingency(const Partition& pred, const Partition& gt) {
    if (pred.labels.size() != gt.labels.size())
        throw Error(ErrorCode::LengthMismatch, "partition sizes differ");
    const Partition p = canonicalize(pred);
    const Partition g = canonicalize(gt);
    Contingency c;
    c.n = static_cast<std::int64_t>(p.labels.size());
    c.pred_k = p.num_clusters;
    c.gt_k = g.num_clusters;
    c.pred_sizes.assign(p.num_clusters, 0);
    c.gt_sizes.assign(g.num_clusters, 0);
    c.cells.reserve(p.labels.size());
    for (std::size_t i = 0; i < p.labels.size(); ++i) {
        c.pred_sizes[p.labels[i]]++;
        c.gt_sizes[g.labels[i]]++;
        c.cells[c.key(p.labels[i], g.labels[i])]++;
    }
    return c;
}

inline std::uint64_t pairs2(std::uint64_t x) { return x * (x - 1) / 2; }

double harmonic(double p, double r) { return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

PrecisionRecallF pairwise_f(const Partition& pred, const Partition& gt) {
    const Contingency c = build_contingency(pred, gt);
    std::uint64_t pred_pairs = 0, gt_pairs = 0, tp = 0;
    for (std::uint64_t s : c.pred_sizes) pred_pairs += pairs2(s);
    for (std::uint64_t s : c.gt_sizes) gt_pairs += pairs2(s);
    for (const auto& [_, count] : c.cells) tp += pairs2(count);
    PrecisionRecallF out;
    out.precision = pred_pairs > 0 ? static_cast<double>(tp) / static_cast<double>(pred_pairs) : 0.0;
    out.recall = gt_pairs > 0 ? static_cast<double>(tp) / static_cast<double>(gt_pairs) : 0.0;
    out.f = harmonic(out.precision, out.recall);
    return out;
}

PrecisionRecallF bcubed_f(const Partition& pred, const Partition& gt) {
    const Contingency c = build_contingency(pred, gt);
    // Item-averaged overlap ratios collapse to sums of overlap^2 / size.
    double precision_sum = 0.0, recall_sum = 0.0;
    for (const auto& [key, count] : c.cells) {
        const std::int64_t p = static_cast<std::int64_t>(key / c.gt_k);
        const std::int64_t g = static_cast<std::int64_t>(key % c.gt_k);
        const double sq = static_cast<double>(count) * static_cast<double>(count);
        precision_sum += sq / static_cast<double>(c.pred_sizes[p]);
        recall_sum += sq / static_cast<double>(c.gt_sizes[g]);
    }
    PrecisionRecallF out;
    out.precision = precision_sum / static_cast<double>(c.n);
    out.recall = recall_sum / static_cast<double>(c.n);
    out.f = harmonic(out.precision, out.recall);
    return out;
}

double nmi(const Partition& pred, const Partition& gt) {
    const Contingency c = build_contingency(pred, gt);
    const double n = static_cast<double>(c.n);
    double h_pred = 0.0, h_gt = 0.0;
    for (std::uint64_t s : c.pred_sizes)
        if (s > 0) h_pred -= (s / n) * std::log(s / n);
    for (std::uint64_t s : c.gt_sizes)
        if (s > 0) h_gt -= (s / n) * std::log(s / n);
    if (h_pred <= 0.0 || h_gt <= 0.0) {
        // Constant partition(s): identical clusterings score 1, anything else 0.
        return (h_pred <= 0.0 && h_gt <= 0.0) ? 1.0 : 0.0;
    }
    double mi = 0.0;
    for (const auto& [key, count] : c.cells) {
        const std::int64_t p = static_cast<std::int64_t>(key / c.gt_k);
        const std::int64_t g = static_cast<std::int64_t>(key % c.gt_k);
        const double pij = count / n;
        mi += pij * std::log(pij * n * n /
                             (static_cast<double>(c.pred_sizes[p]) * static_cast<double>(c.gt_sizes[g])));
    }
    const double value = mi / std::sqrt(h_pred * h_gt);
    return std::clamp(value, 0.0, 1.0);
}

EvalReport evaluate(const Partition& pred, const Partition& gt) {
    EvalReport r;
    r.pairwise = pairwise_f(pred, gt);
    r.bcubed = bcubed_f(pred, gt);
    r.nmi = nmi(pred, gt);
    r.n = static_cast<std::int64_t>(pred.labels.size());
    r.pred_clusters = canonicalize(pred).num_clusters;
    r.gt_clusters = canonicalize(gt).num_clusters;
    return r;
}

std::string report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["pairwise"] = {{"precision", r.pairwise.precision}, {"recall", r.pairwise.recall}, {"f", r.pairwise.f}};
    j["bcubed"] = {{"precision", r.bcubed.precision}, {"recall", r.bcubed.recall}, {"f", r.bcubed.f}};
    j["nmi"] = r.nmi;
    j["n"] = r.n;
    j["pred_clusters"] = r.pred_clusters;
    j["gt_clusters"] = r.gt_clusters;
    return j.dump(2) + "\n";
}

}  // namespace stfc
