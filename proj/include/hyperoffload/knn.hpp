#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hyperoffload/error.hpp"
#include "hyperoffload/hyperprofile.hpp"

namespace hyperoffload {

enum class Metric { euclidean, rectilinear };

inline std::string_view to_string(Metric m) { return m == Metric::euclidean ? "euclidean" : "rectilinear"; }

inline std::optional<Metric> parse_metric(std::string_view s) {
    if (s == "euclidean") return Metric::euclidean;
    if (s == "rectilinear") return Metric::rectilinear;
    return std::nullopt;
}

/// L2 or L1 distance. Components are accumulated in dimension order; the k-d
/// tree relies on this for bit-identical results with the linear scan.
inline double distance(std::span<const double> p, std::span<const double> q, Metric metric) {
    if (p.size() != q.size())
        throw ValidationError("dimension mismatch: " + std::to_string(p.size()) + " vs " + std::to_string(q.size()));
    double acc = 0.0;
    if (metric == Metric::euclidean) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double d = p[i] - q[i];
            acc += d * d;
        }
        return std::sqrt(acc);
    }
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
    return acc;
}

struct Hit {
    std::string node_id;
    double distance = 0.0;

    bool operator==(const Hit&) const = default;
};

/// Exactly min(k, |P|) hits ordered by (distance, node_id).
struct QueryResult {
    Metric metric = Metric::euclidean;
    std::size_t k = 0;
    std::vector<Hit> hits;

    bool operator==(const QueryResult&) const = default;
};

namespace detail {

inline void check_query(const Hyperprofile& profile, std::span<const double> q, std::size_t k) {
    if (profile.empty()) throw ValidationError("empty profile");
    if (k == 0) throw ValidationError("k must be at least 1");
    if (q.size() != profile.dimension_count())
        throw ValidationError("dimension mismatch: query has " + std::to_string(q.size()) + " coordinates, profile has " +
                              std::to_string(profile.dimension_count()));
}

}  // namespace detail

/// Linear-scan kNN. A point p belongs to kNN(q) iff fewer than k points are
/// strictly closer than p; ties at the k-th distance go to the smaller node_id
/// so the result always has min(k, |P|) members.
inline QueryResult knn_query(const Hyperprofile& profile, std::span<const double> q, std::size_t k, Metric metric) {
    detail::check_query(profile, q, k);
    const auto& pts = profile.points();
    std::vector<double> dist(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) dist[i] = distance(pts[i].coords, q, metric);
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto take = std::min(k, pts.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (dist[a] != dist[b]) return dist[a] < dist[b];
                          return pts[a].node_id < pts[b].node_id;
                      });
    QueryResult result{metric, k, {}};
    result.hits.reserve(take);
    for (std::size_t i = 0; i < take; ++i) result.hits.push_back({pts[order[i]].node_id, dist[order[i]]});
    return result;
}

/// Number of nodes in `a` that are not in `b`.
inline std::size_t mismatch_count(const QueryResult& a, const QueryResult& b) {
    if (a.k != b.k) throw ValidationError("k mismatch: " + std::to_string(a.k) + " vs " + std::to_string(b.k));
    std::set<std::string_view> in_b;
    for (const auto& h : b.hits) in_b.insert(h.node_id);
    std::size_t n = 0;
    for (const auto& h : a.hits) n += in_b.count(h.node_id) == 0 ? 1 : 0;
    return n;
}

}  // namespace hyperoffload
