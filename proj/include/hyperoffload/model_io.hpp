#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hyperoffload/error.hpp"
#include "hyperoffload/regression.hpp"

namespace hyperoffload {

namespace detail {

// JSON has no infinities; a score of -inf is stored as null.
inline nlohmann::json score_to_json(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

inline double score_from_json(const nlohmann::json& j) {
    return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace detail

inline nlohmann::json model_to_json(const PredictionModel& m) {
    using detail::score_to_json;
    return {
        {"energy_slope", {{"a", m.energy_slope.a}, {"p", m.energy_slope.p}, {"r2", score_to_json(m.energy_slope.r_squared)}}},
        {"time_slope", {{"K", m.time_slope.numerator}, {"r2", score_to_json(m.time_slope.r_squared)}}},
        {"time_intercept",
         {{"A", m.time_intercept.amplitude}, {"B", m.time_intercept.rate}, {"r2", score_to_json(m.time_intercept.r_squared)}}},
        {"cv_energy", score_to_json(m.cv_energy)},
        {"cv_time", score_to_json(m.cv_time)},
        {"units", {{"time", "ns"}, {"energy", "J"}, {"bandwidth", "Kbps"}, {"data", "bytes"}}},
    };
}

inline PredictionModel model_from_json(const nlohmann::json& j) {
    using detail::score_from_json;
    PredictionModel m;
    try {
        const auto& units = j.at("units");
        if (units.at("time") != "ns" || units.at("energy") != "J" || units.at("bandwidth") != "Kbps" ||
            units.at("data") != "bytes")
            throw ValidationError("model file units must be {time: ns, energy: J, bandwidth: Kbps, data: bytes}");
        const auto& es = j.at("energy_slope");
        m.energy_slope = {es.at("a").get<double>(), es.at("p").get<double>(), score_from_json(es.at("r2"))};
        const auto& ts = j.at("time_slope");
        m.time_slope = {ts.at("K").get<double>(), score_from_json(ts.at("r2"))};
        const auto& ti = j.at("time_intercept");
        m.time_intercept = {ti.at("A").get<double>(), ti.at("B").get<double>(), score_from_json(ti.at("r2"))};
        m.cv_energy = score_from_json(j.at("cv_energy"));
        m.cv_time = score_from_json(j.at("cv_time"));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed model document: ") + e.what());
    }
    validate(m);
    return m;
}

inline void save_model(const std::filesystem::path& path, const PredictionModel& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << model_to_json(m).dump(2) << '\n';
    if (!os) throw IoError("failed writing " + path.string());
}

inline PredictionModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open model file " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

}  // namespace hyperoffload
