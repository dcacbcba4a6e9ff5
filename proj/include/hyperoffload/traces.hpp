#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hyperoffload/csv.hpp"
#include "hyperoffload/error.hpp"
#include "hyperoffload/random.hpp"

namespace hyperoffload {

/// Reference constants of the multistep model. Bandwidth in Kbps, data in
/// bytes, energy in joules, time in nanoseconds.
namespace reference {
inline constexpr double energy_coefficient = 0.015;  // m1 = a * b^p
inline constexpr double energy_exponent = -1.13;
inline constexpr double time_numerator = 8.04e6;  // m2 = K / b
inline constexpr double intercept_amplitude = 222873.0;  // c = A * e^(B b)
inline constexpr double intercept_rate = 0.0004;
}  // namespace reference

/// One observation of sending `data_size_bytes` over a link of `bandwidth_kbps`.
struct TraceRecord {
    double bandwidth_kbps = 0.0;
    double data_size_bytes = 0.0;
    double energy_j = 0.0;
    double time_ns = 0.0;
    std::optional<double> distance_m;

    bool operator==(const TraceRecord&) const = default;
};

/// Throws ValidationError when a record breaks the positivity/nonnegativity rules.
inline void validate(const TraceRecord& r) {
    if (!(r.bandwidth_kbps > 0.0) || !std::isfinite(r.bandwidth_kbps))
        throw ValidationError("bandwidth_kbps must be positive");
    if (!(r.data_size_bytes > 0.0) || !std::isfinite(r.data_size_bytes))
        throw ValidationError("data_size_bytes must be positive");
    if (!(r.energy_j >= 0.0)) throw ValidationError("energy_j must be nonnegative");
    if (!(r.time_ns >= 0.0)) throw ValidationError("time_ns must be nonnegative");
    if (r.distance_m && !(*r.distance_m >= 0.0)) throw ValidationError("distance_m must be nonnegative");
}

/// 20 log-spaced sizes over [60 kB, 250 MB], endpoints exact.
inline std::vector<double> default_data_size_grid() {
    constexpr double lo = 6.0e4;
    constexpr double hi = 2.5e8;
    constexpr int n = 20;
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i) grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

struct GeneratorConfig {
    std::vector<double> bandwidth_grid{250, 500, 1000, 2000, 4000, 8000, 15000};
    std::vector<double> data_size_grid = default_data_size_grid();
    double noise_rel_sigma = 0.0;
    std::uint64_t seed = 0;
    bool include_distance = false;
    std::pair<double, double> distance_range_m{10.0, 100.0};

    void validate() const {
        if (bandwidth_grid.empty()) throw ValidationError("bandwidth grid is empty");
        if (data_size_grid.empty()) throw ValidationError("data size grid is empty");
        for (double b : bandwidth_grid)
            if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("bandwidth grid values must be positive");
        for (double d : data_size_grid)
            if (!(d > 0.0) || !std::isfinite(d)) throw ValidationError("data size grid values must be positive");
        if (!(noise_rel_sigma >= 0.0) || !std::isfinite(noise_rel_sigma))
            throw ValidationError("noise_rel_sigma must be nonnegative");
        if (include_distance) {
            const auto [lo, hi] = distance_range_m;
            if (!(lo >= 0.0) || !(hi >= lo) || !std::isfinite(hi))
                throw ValidationError("distance range must satisfy 0 <= lo <= hi");
        }
    }
};

/// Synthetic traces on the bandwidth x data-size grid, bandwidth-major.
///
/// Energy and the data-proportional part of time each carry an independent
/// multiplicative factor (1 + eps), eps ~ N(0, noise_rel_sigma^2). The factor is
/// floored at zero so records stay nonnegative under extreme sigma. The time
/// intercept is noise-free, which keeps zero-byte energy exactly zero.
inline std::vector<TraceRecord> gen_traces(const GeneratorConfig& config) {
    config.validate();
    using namespace reference;
    Rng rng(config.seed);
    std::vector<TraceRecord> out;
    out.reserve(config.bandwidth_grid.size() * config.data_size_grid.size());
    for (double b : config.bandwidth_grid) {
        const double m1 = energy_coefficient * std::pow(b, energy_exponent);
        const double m2 = time_numerator / b;
        const double c = intercept_amplitude * std::exp(intercept_rate * b);
        for (double d : config.data_size_grid) {
            double f1 = 1.0;
            double f2 = 1.0;
            if (config.noise_rel_sigma > 0.0) {
                f1 = std::max(0.0, 1.0 + config.noise_rel_sigma * rng.normal());
                f2 = std::max(0.0, 1.0 + config.noise_rel_sigma * rng.normal());
            }
            TraceRecord r;
            r.bandwidth_kbps = b;
            r.data_size_bytes = d;
            r.energy_j = m1 * d * f1;
            r.time_ns = m2 * d * f2 + c;
            if (config.include_distance)
                r.distance_m = rng.uniform(config.distance_range_m.first, config.distance_range_m.second);
            out.push_back(r);
        }
    }
    return out;
}

inline constexpr const char* trace_header = "bandwidth_kbps,data_size_bytes,energy_j,time_ns";

/// Writes the trace CSV. The distance column appears when any record carries
/// one; records without a distance leave that field empty.
inline void write_traces(std::ostream& os, const std::vector<TraceRecord>& records) {
    bool with_distance = false;
    for (const auto& r : records) with_distance = with_distance || r.distance_m.has_value();
    os << trace_header << (with_distance ? ",distance_m" : "") << '\n';
    for (const auto& r : records) {
        os << csv::format_real(r.bandwidth_kbps) << ',' << csv::format_real(r.data_size_bytes) << ','
           << csv::format_real(r.energy_j) << ',' << csv::format_real(r.time_ns);
        if (with_distance) {
            os << ',';
            if (r.distance_m) os << csv::format_real(*r.distance_m);
        }
        os << '\n';
    }
}

inline void write_traces(const std::filesystem::path& path, const std::vector<TraceRecord>& records) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    write_traces(os, records);
    if (!os) throw IoError("failed writing " + path.string());
}

/// Parses trace CSV text. `source` names the input in diagnostics.
inline std::vector<TraceRecord> parse_traces(std::istream& is, const std::string& source = "<input>") {
    static constexpr const char* names[] = {"bandwidth_kbps", "data_size_bytes", "energy_j", "time_ns",
                                            "distance_m"};
    std::string line;
    std::size_t lineno = 0;
    std::size_t columns = 0;
    while (columns == 0 && std::getline(is, line)) {
        ++lineno;
        if (csv::is_blank(line)) continue;
        const auto head = csv::split(line);
        if (head.size() != 4 && head.size() != 5)
            throw IoError(source + ":" + std::to_string(lineno) + ": header must have 4 or 5 columns");
        for (std::size_t i = 0; i < head.size(); ++i) {
            if (head[i] != names[i])
                throw IoError(source + ":" + std::to_string(lineno) + ": expected header column '" + names[i] +
                              "', found '" + std::string(head[i]) + "'");
        }
        columns = head.size();
    }
    if (columns == 0) throw IoError(source + ": missing header");

    std::vector<TraceRecord> out;
    while (std::getline(is, line)) {
        ++lineno;
        if (csv::is_blank(line)) continue;
        const auto where = source + ":" + std::to_string(lineno) + ": ";
        const auto fields = csv::split(line);
        if (fields.size() != columns)
            throw IoError(where + "expected " + std::to_string(columns) + " fields, found " +
                          std::to_string(fields.size()));
        double v[4];
        for (std::size_t i = 0; i < 4; ++i) {
            const auto parsed = csv::parse_real(fields[i]);
            if (!parsed) throw IoError(where + "malformed " + names[i] + " '" + std::string(fields[i]) + "'");
            v[i] = *parsed;
        }
        TraceRecord r{v[0], v[1], v[2], v[3], std::nullopt};
        if (columns == 5 && !fields[4].empty()) {
            const auto parsed = csv::parse_real(fields[4]);
            if (!parsed) throw IoError(where + "malformed distance_m '" + std::string(fields[4]) + "'");
            r.distance_m = *parsed;
        }
        if (!(r.bandwidth_kbps > 0.0)) throw ValidationError(where + "non-positive bandwidth_kbps");
        if (!(r.data_size_bytes > 0.0)) throw ValidationError(where + "non-positive data_size_bytes");
        if (r.energy_j < 0.0) throw ValidationError(where + "negative energy_j");
        if (r.time_ns < 0.0) throw ValidationError(where + "negative time_ns");
        if (r.distance_m && *r.distance_m < 0.0) throw ValidationError(where + "negative distance_m");
        out.push_back(r);
    }
    return out;
}

inline std::vector<TraceRecord> ingest_traces(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open trace file " + path.string());
    return parse_traces(is, path.string());
}

}  // namespace hyperoffload
