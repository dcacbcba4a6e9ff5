#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hyperoffload/csv.hpp"
#include "hyperoffload/error.hpp"
#include "hyperoffload/regression.hpp"

namespace hyperoffload {

struct NodeSpec {
    std::string node_id;
    double bandwidth_kbps = 0.0;  // user <-> node link
    std::map<std::string, double> static_metrics;
};

struct TaskSpec {
    double data_size_bytes = 0.0;
    std::size_t partitions = 1;  // k
};

struct ProfilePoint {
    std::string node_id;
    std::vector<double> coords;

    bool operator==(const ProfilePoint&) const = default;
};

struct Dimension {
    std::string label;  // e.g. "energy_j"
    std::string unit;   // e.g. "J"

    bool operator==(const Dimension&) const = default;
};

enum class ProfileKind { base, hyper };

/// Labeled points in a feature space where every dimension is minimized and
/// the user sits at the origin. Immutable once built; construction checks
/// dimensionality, nonnegativity and node-id uniqueness.
class Hyperprofile {
public:
    Hyperprofile(std::vector<Dimension> dimensions, std::vector<ProfilePoint> points, ProfileKind kind)
        : dimensions_(std::move(dimensions)), points_(std::move(points)), kind_(kind) {
        if (dimensions_.empty()) throw ValidationError("a profile needs at least one dimension");
        std::set<std::string_view> seen;
        for (const auto& p : points_) {
            if (p.coords.size() != dimensions_.size())
                throw ValidationError("node " + p.node_id + " has " + std::to_string(p.coords.size()) +
                                      " coordinates, profile has " + std::to_string(dimensions_.size()) +
                                      " dimensions");
            for (double c : p.coords)
                if (!std::isfinite(c) || c < 0.0)
                    throw ValidationError("node " + p.node_id + " has a negative or non-finite coordinate");
            if (!seen.insert(p.node_id).second) throw ValidationError("duplicate node_id " + p.node_id);
        }
    }

    const std::vector<Dimension>& dimensions() const noexcept { return dimensions_; }
    const std::vector<ProfilePoint>& points() const noexcept { return points_; }
    ProfileKind kind() const noexcept { return kind_; }
    std::size_t dimension_count() const noexcept { return dimensions_.size(); }
    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }

private:
    std::vector<Dimension> dimensions_;
    std::vector<ProfilePoint> points_;
    ProfileKind kind_;
};

inline std::vector<Dimension> predicted_dimensions() { return {{"energy_j", "J"}, {"time_ns", "ns"}}; }

/// Places each node at (predicted energy, predicted time) for the task.
inline Hyperprofile build_hyperprofile(std::span<const NodeSpec> nodes, const TaskSpec& task,
                                       const PredictionModel& model) {
    if (nodes.empty()) throw ValidationError("empty fleet: no nodes to profile");
    if (task.partitions < 1) throw ValidationError("task partitions must be at least 1");
    std::vector<ProfilePoint> points;
    points.reserve(nodes.size());
    for (const auto& n : nodes) {
        if (!(n.bandwidth_kbps > 0.0)) throw ValidationError("node " + n.node_id + " has non-positive bandwidth");
        points.push_back({n.node_id,
                          {predict_energy(model, n.bandwidth_kbps, task.data_size_bytes),
                           predict_time(model, n.bandwidth_kbps, task.data_size_bytes)}});
    }
    return {predicted_dimensions(), std::move(points), ProfileKind::hyper};
}

/// Profile over deterministic per-node metrics, read in the given order.
inline Hyperprofile build_base_profile(std::span<const NodeSpec> nodes, std::span<const std::string> metric_names) {
    if (metric_names.empty()) throw ValidationError("a base profile needs at least one metric");
    std::vector<Dimension> dims;
    for (const auto& name : metric_names) dims.push_back({name, ""});
    std::vector<ProfilePoint> points;
    points.reserve(nodes.size());
    for (const auto& n : nodes) {
        ProfilePoint p{n.node_id, {}};
        for (const auto& name : metric_names) {
            const auto it = n.static_metrics.find(name);
            if (it == n.static_metrics.end())
                throw ValidationError("missing metric: node " + n.node_id + " has no '" + name + "'");
            p.coords.push_back(it->second);
        }
        points.push_back(std::move(p));
    }
    return {std::move(dims), std::move(points), ProfileKind::base};
}

/// `node_id,<dim1>,<dim2>,...`
inline void write_profile_csv(std::ostream& os, const Hyperprofile& profile) {
    os << "node_id";
    for (const auto& d : profile.dimensions()) os << ',' << d.label;
    os << '\n';
    for (const auto& p : profile.points()) {
        os << p.node_id;
        for (double c : p.coords) os << ',' << csv::format_real(c);
        os << '\n';
    }
}

/// Fleet CSV: `node_id,bandwidth_kbps[,name=value;name=value...]`. A leading
/// line whose first field is `node_id` is treated as a header.
inline std::vector<NodeSpec> parse_fleet(std::istream& is, const std::string& source = "<fleet>") {
    std::vector<NodeSpec> nodes;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(is, line)) {
        ++lineno;
        if (csv::is_blank(line)) continue;
        const auto where = source + ":" + std::to_string(lineno) + ": ";
        const auto fields = csv::split(line);
        if (first && fields[0] == "node_id") {
            first = false;
            continue;
        }
        first = false;
        if (fields.size() < 2 || fields.size() > 3)
            throw IoError(where + "expected node_id,bandwidth_kbps[,metrics]");
        NodeSpec n;
        n.node_id = std::string(fields[0]);
        if (n.node_id.empty()) throw IoError(where + "empty node_id");
        const auto b = csv::parse_real(fields[1]);
        if (!b) throw IoError(where + "malformed bandwidth_kbps '" + std::string(fields[1]) + "'");
        if (!(*b > 0.0)) throw ValidationError(where + "non-positive bandwidth_kbps");
        n.bandwidth_kbps = *b;
        if (fields.size() == 3 && !fields[2].empty()) {
            for (auto kv : csv::split(fields[2], ';')) {
                if (kv.empty()) continue;
                const auto eq = kv.find('=');
                if (eq == std::string_view::npos) throw IoError(where + "metric '" + std::string(kv) + "' lacks '='");
                const auto name = csv::trim(kv.substr(0, eq));
                const auto value = csv::parse_real(csv::trim(kv.substr(eq + 1)));
                if (name.empty() || !value) throw IoError(where + "malformed metric '" + std::string(kv) + "'");
                n.static_metrics[std::string(name)] = *value;
            }
        }
        if (!seen.insert(n.node_id).second) throw ValidationError(where + "duplicate node_id " + n.node_id);
        nodes.push_back(std::move(n));
    }
    return nodes;
}

inline std::vector<NodeSpec> load_fleet(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open fleet file " + path.string());
    return parse_fleet(is, path.string());
}

}  // namespace hyperoffload
