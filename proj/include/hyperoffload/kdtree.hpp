#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "hyperoffload/hyperprofile.hpp"
#include "hyperoffload/knn.hpp"

namespace hyperoffload {

/// Exact k-d tree over a profile, answering L1 and L2 kNN queries with the
/// same (distance, node_id) ordering as knn_query.
///
/// The tree owns a copy of the coordinates, so it stays valid after the
/// profile goes away. Nodes split at the median of their widest dimension and
/// store a bounding box; a subtree is skipped only when its box is strictly
/// farther than the current k-th best, since an equal distance could still
/// win the node_id tie-break.
class KdTree {
public:
    static constexpr std::size_t leaf_size = 8;

    explicit KdTree(const Hyperprofile& profile) : dim_(profile.dimension_count()), size_(profile.size()) {
        if (profile.empty()) throw ValidationError("empty profile");
        const auto& pts = profile.points();

        // Rank of each point in node_id order; ranks stand in for ids in comparisons.
        std::vector<std::size_t> by_id(size_);
        std::iota(by_id.begin(), by_id.end(), std::size_t{0});
        std::sort(by_id.begin(), by_id.end(),
                  [&](std::size_t a, std::size_t b) { return pts[a].node_id < pts[b].node_id; });
        std::vector<std::size_t> rank_of(size_);
        for (std::size_t r = 0; r < size_; ++r) rank_of[by_id[r]] = r;

        std::vector<std::size_t> perm(size_);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        nodes_.reserve(2 * size_ / leaf_size + 1);
        build(perm, pts, 0, size_);

        coords_.resize(size_ * dim_);
        ranks_.resize(size_);
        ids_.resize(size_);
        for (std::size_t i = 0; i < size_; ++i) {
            std::copy(pts[perm[i]].coords.begin(), pts[perm[i]].coords.end(), coords_.begin() + i * dim_);
            ranks_[i] = rank_of[perm[i]];
            ids_[i] = pts[perm[i]].node_id;
        }
    }

    std::size_t size() const noexcept { return size_; }
    std::size_t dimension_count() const noexcept { return dim_; }

    QueryResult query(std::span<const double> q, std::size_t k, Metric metric) const {
        if (k == 0) throw ValidationError("k must be at least 1");
        if (q.size() != dim_)
            throw ValidationError("dimension mismatch: query has " + std::to_string(q.size()) +
                                  " coordinates, index has " + std::to_string(dim_));
        Search s{q, metric, std::min(k, size_), {}};
        visit(s, 0);
        std::vector<Candidate> best;
        best.reserve(s.heap.size());
        while (!s.heap.empty()) {
            best.push_back(s.heap.top());
            s.heap.pop();
        }
        QueryResult result{metric, k, {}};
        result.hits.reserve(best.size());
        for (auto it = best.rbegin(); it != best.rend(); ++it) result.hits.push_back({ids_[it->pos], it->dist});
        return result;
    }

private:
    struct Node {
        std::size_t begin = 0;
        std::size_t end = 0;
        std::int64_t left = -1;
        std::int64_t right = -1;
    };

    struct Candidate {
        double dist;
        std::size_t rank;
        std::size_t pos;

        // Max-heap top is the worst (largest distance, then largest rank).
        bool operator<(const Candidate& o) const { return dist != o.dist ? dist < o.dist : rank < o.rank; }
    };

    struct Search {
        std::span<const double> q;
        Metric metric;
        std::size_t want;
        std::priority_queue<Candidate> heap;
    };

    std::size_t build(std::vector<std::size_t>& perm, const std::vector<ProfilePoint>& pts, std::size_t begin,
                      std::size_t end) {
        const std::size_t id = nodes_.size();
        nodes_.push_back({begin, end, -1, -1});
        box_lo_.resize((id + 1) * dim_);
        box_hi_.resize((id + 1) * dim_);
        std::size_t widest = 0;
        double spread = -1.0;
        for (std::size_t d = 0; d < dim_; ++d) {
            double lo = pts[perm[begin]].coords[d];
            double hi = lo;
            for (std::size_t i = begin + 1; i < end; ++i) {
                lo = std::min(lo, pts[perm[i]].coords[d]);
                hi = std::max(hi, pts[perm[i]].coords[d]);
            }
            box_lo_[id * dim_ + d] = lo;
            box_hi_[id * dim_ + d] = hi;
            if (hi - lo > spread) {
                spread = hi - lo;
                widest = d;
            }
        }
        if (end - begin <= leaf_size || spread <= 0.0) return id;

        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                         perm.begin() + static_cast<std::ptrdiff_t>(mid),
                         perm.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                             return pts[a].coords[widest] < pts[b].coords[widest];
                         });
        const auto left = build(perm, pts, begin, mid);
        const auto right = build(perm, pts, mid, end);
        nodes_[id].left = static_cast<std::int64_t>(left);
        nodes_[id].right = static_cast<std::int64_t>(right);
        return id;
    }

    // Lower bound on the distance from q to any point in the node's box. Each
    // per-dimension gap is no larger than the true coordinate difference, and
    // rounding is monotone, so the bound holds in floating point too.
    double box_distance(std::size_t node, std::span<const double> q, Metric metric) const {
        double acc = 0.0;
        for (std::size_t d = 0; d < dim_; ++d) {
            const double lo = box_lo_[node * dim_ + d];
            const double hi = box_hi_[node * dim_ + d];
            double gap = 0.0;
            if (q[d] < lo)
                gap = lo - q[d];
            else if (q[d] > hi)
                gap = q[d] - hi;
            acc += metric == Metric::euclidean ? gap * gap : gap;
        }
        return metric == Metric::euclidean ? std::sqrt(acc) : acc;
    }

    void visit(Search& s, std::size_t node) const {
        const Node& n = nodes_[node];
        if (s.heap.size() == s.want && box_distance(node, s.q, s.metric) > s.heap.top().dist) return;
        if (n.left < 0) {
            for (std::size_t i = n.begin; i < n.end; ++i) {
                const Candidate c{distance(std::span<const double>(coords_.data() + i * dim_, dim_), s.q, s.metric),
                                  ranks_[i], i};
                if (s.heap.size() < s.want) {
                    s.heap.push(c);
                } else if (c < s.heap.top()) {
                    s.heap.pop();
                    s.heap.push(c);
                }
            }
            return;
        }
        const auto l = static_cast<std::size_t>(n.left);
        const auto r = static_cast<std::size_t>(n.right);
        if (box_distance(l, s.q, s.metric) <= box_distance(r, s.q, s.metric)) {
            visit(s, l);
            visit(s, r);
        } else {
            visit(s, r);
            visit(s, l);
        }
    }

    std::size_t dim_;
    std::size_t size_;
    std::vector<Node> nodes_;
    std::vector<double> box_lo_;
    std::vector<double> box_hi_;
    std::vector<double> coords_;
    std::vector<std::size_t> ranks_;
    std::vector<std::string> ids_;
};

using SpatialIndex = KdTree;

inline SpatialIndex build_index(const Hyperprofile& profile) { return SpatialIndex(profile); }

inline QueryResult knn_query_indexed(const SpatialIndex& index, std::span<const double> q, std::size_t k,
                                     Metric metric) {
    return index.query(q, k, metric);
}

}  // namespace hyperoffload
