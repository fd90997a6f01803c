#include "stfc/knn.hpp"

#include <algorithm>
#include <cmath>

#include "stfc/parallel.hpp"

namespace stfc {

namespace {

// Ranking order: higher similarity first, ties toward the lower index.
// Used as the heap comparator so that heap.front() is the weakest kept entry.
inline bool stronger(const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.index < b.index;
}

inline double dot(std::span<const float> a, const float* b, std::int64_t d) {
    double acc = 0.0;
    for (std::int64_t j = 0; j < d; ++j) acc += static_cast<double>(a[j]) * b[j];
    return acc;
}

}  // namespace

std::vector<Neighbor> cosine_topk(std::span<const float> query, const FeatureSet& fs,
                                  std::int64_t k, std::int64_t self_index) {
    if (k > fs.n) throw Error(ErrorCode::KTooLarge, "k exceeds set size");
    std::vector<Neighbor> heap;  // front() is the weakest kept entry
    heap.reserve(k);
    for (std::int64_t i = 0; i < fs.n; ++i) {
        if (i == self_index) continue;
        const Neighbor cand{static_cast<NodeId>(i), dot(query, fs.data.data() + i * fs.d, fs.d)};
        if (static_cast<std::int64_t>(heap.size()) < k) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end(), stronger);
        } else if (stronger(cand, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), stronger);
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end(), stronger);
        }
    }
    std::sort(heap.begin(), heap.end(), stronger);
    return heap;
}

SparseGraph build_knn_graph(const FeatureSet& fs, const KnnConfig& cfg) {
    if (cfg.k < 1 || cfg.k >= fs.n)
        throw Error(ErrorCode::KTooLarge, "need 1 <= k < n, got k=" + std::to_string(cfg.k) +
                                              " n=" + std::to_string(fs.n));
    const std::int64_t n = fs.n;
    const std::int64_t k = cfg.k;

    // Directed phase: each query row owns its output slots, so the result is
    // independent of how queries are split across workers.
    SparseGraph d;
    d.n = static_cast<NodeId>(n);
    d.symmetric = false;
    d.row_ptr.resize(n + 1);
    for (std::int64_t i = 0; i <= n; ++i) d.row_ptr[i] = static_cast<std::uint64_t>(i) * k;
    d.col_idx.resize(static_cast<std::size_t>(n) * k);
    d.weights.resize(static_cast<std::size_t>(n) * k);

    parallel_for(
        0, n,
        [&](std::int64_t lo, std::int64_t hi) {
            std::vector<Neighbor> buf;
            for (std::int64_t i = lo; i < hi; ++i) {
                buf = cosine_topk(fs.row(i), fs, k, i);
                // CSR rows keep columns strictly increasing.
                std::sort(buf.begin(), buf.end(),
                          [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
                for (std::int64_t j = 0; j < k; ++j) {
                    d.col_idx[i * k + j] = buf[j].index;
                    d.weights[i * k + j] = static_cast<float>(buf[j].similarity);
                }
            }
        },
        cfg.num_threads);

    if (!cfg.symmetrize) return d;

    // Union with the transpose. Cosine weights are direction independent, so
    // either side of a mirrored edge carries the identical value.
    const SparseGraph t = transpose(d);
    SparseGraph g;
    g.n = d.n;
    g.symmetric = true;
    g.row_ptr.assign(n + 1, 0);
    auto merge_row = [&](NodeId u, auto&& emit) {
        auto a = d.neighbors(u);
        auto b = t.neighbors(u);
        auto wa = d.edge_weights(u);
        auto wb = t.edge_weights(u);
        std::size_t i = 0, j = 0;
        while (i < a.size() || j < b.size()) {
            if (j == b.size() || (i < a.size() && a[i] < b[j])) {
                emit(a[i], wa[i]);
                ++i;
            } else if (i == a.size() || b[j] < a[i]) {
                emit(b[j], wb[j]);
                ++j;
            } else {
                emit(a[i], wa[i]);
                ++i;
                ++j;
            }
        }
    };
    for (std::int64_t u = 0; u < n; ++u) {
        std::uint64_t count = 0;
        merge_row(static_cast<NodeId>(u), [&](NodeId, float) { ++count; });
        g.row_ptr[u + 1] = g.row_ptr[u] + count;
    }
    g.col_idx.resize(g.row_ptr[n]);
    g.weights.resize(g.row_ptr[n]);
    parallel_for(
        0, n,
        [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t u = lo; u < hi; ++u) {
                std::uint64_t slot = g.row_ptr[u];
                merge_row(static_cast<NodeId>(u), [&](NodeId v, float w) {
                    g.col_idx[slot] = v;
                    g.weights[slot] = w;
                    ++slot;
                });
            }
        },
        cfg.num_threads);
    return g;
}

}  // namespace stfc
