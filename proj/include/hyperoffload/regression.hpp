#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hyperoffload/error.hpp"
#include "hyperoffload/random.hpp"
#include "hyperoffload/traces.hpp"

namespace hyperoffload {

struct Sample {
    double x = 0.0;
    double y = 0.0;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;  // unclamped; negative for fits worse than the mean

    double operator()(double x) const { return slope * x + intercept; }
};

/// m(b) = a * b^p
struct PowerLawModel {
    double a = 1.0;
    double p = 0.0;
    double r_squared = 1.0;

    double operator()(double b) const { return a * std::pow(b, p); }
};

/// c(b) = A * e^(B b)
struct ExponentialModel {
    double amplitude = 1.0;
    double rate = 0.0;
    double r_squared = 1.0;

    double operator()(double b) const { return amplitude * std::exp(rate * b); }
};

/// m(b) = K / b, a power law with the exponent pinned to -1.
struct ReciprocalModel {
    double numerator = 1.0;
    double r_squared = 1.0;

    double operator()(double b) const { return numerator / b; }
};

/// Energy e = m1(b) d and time t = m2(b) d + c(b).
struct PredictionModel {
    PowerLawModel energy_slope;
    ReciprocalModel time_slope;
    ExponentialModel time_intercept;
    double cv_energy = 1.0;
    double cv_time = 1.0;
};

/// The closed-form model the synthetic generator samples from.
inline PredictionModel reference_model() {
    PredictionModel m;
    m.energy_slope = {reference::energy_coefficient, reference::energy_exponent, 1.0};
    m.time_slope = {reference::time_numerator, 1.0};
    m.time_intercept = {reference::intercept_amplitude, reference::intercept_rate, 1.0};
    return m;
}

inline void validate(const PredictionModel& m) {
    const auto finite_positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!finite_positive(m.energy_slope.a)) throw ValidationError("energy slope coefficient must be positive");
    if (!std::isfinite(m.energy_slope.p)) throw ValidationError("energy slope exponent must be finite");
    if (!finite_positive(m.time_slope.numerator)) throw ValidationError("time slope numerator must be positive");
    if (!finite_positive(m.time_intercept.amplitude))
        throw ValidationError("time intercept amplitude must be positive");
    if (!std::isfinite(m.time_intercept.rate)) throw ValidationError("time intercept rate must be finite");
    for (double r2 : {m.energy_slope.r_squared, m.time_slope.r_squared, m.time_intercept.r_squared, m.cv_energy,
                      m.cv_time})
        if (r2 > 1.0 || std::isnan(r2)) throw ValidationError("fit scores must be <= 1");
}

namespace detail {

inline double r_squared(std::span<const Sample> pts, double slope, double intercept) {
    long double mean = 0.0L;
    for (const auto& s : pts) mean += s.y;
    mean /= static_cast<long double>(pts.size());
    bool constant = true;
    for (const auto& s : pts) constant = constant && s.y == pts.front().y;
    if (constant) mean = pts.front().y;
    long double ss_res = 0.0L;
    long double ss_tot = 0.0L;
    for (const auto& s : pts) {
        const long double r = s.y - (static_cast<long double>(slope) * s.x + intercept);
        const long double t = s.y - mean;
        ss_res += r * r;
        ss_tot += t * t;
    }
    if (ss_tot == 0.0L) return ss_res == 0.0L ? 1.0 : -std::numeric_limits<double>::infinity();
    return static_cast<double>(1.0L - ss_res / ss_tot);
}

}  // namespace detail

/// Ordinary least squares of y on x. With `force_zero_intercept` the line
/// passes through the origin and slope = sum(xy) / sum(x^2). R^2 is always
/// measured against the mean of y.
inline LinearFit fit_linear(std::span<const Sample> pts, bool force_zero_intercept) {
    if (pts.size() < 2) throw ValidationError("insufficient data: linear fit needs at least 2 points");
    for (const auto& s : pts)
        if (!std::isfinite(s.x) || !std::isfinite(s.y)) throw ValidationError("linear fit input must be finite");

    LinearFit fit;
    if (force_zero_intercept) {
        long double sxx = 0.0L;
        long double sxy = 0.0L;
        for (const auto& s : pts) {
            sxx += static_cast<long double>(s.x) * s.x;
            sxy += static_cast<long double>(s.x) * s.y;
        }
        if (sxx == 0.0L) throw ValidationError("degenerate x: through-origin fit needs a nonzero x");
        fit.slope = static_cast<double>(sxy / sxx);
        fit.intercept = 0.0;
    } else {
        const auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(),
                                                  [](const Sample& a, const Sample& b) { return a.x < b.x; });
        if (lo->x == hi->x) throw ValidationError("degenerate x: all x values are equal");
        long double mx = 0.0L;
        long double my = 0.0L;
        for (const auto& s : pts) {
            mx += s.x;
            my += s.y;
        }
        const auto n = static_cast<long double>(pts.size());
        mx /= n;
        my /= n;
        bool constant = true;
        for (const auto& s : pts) constant = constant && s.y == pts.front().y;
        if (constant) my = pts.front().y;
        long double sxx = 0.0L;
        long double sxy = 0.0L;
        for (const auto& s : pts) {
            const long double dx = s.x - mx;
            sxx += dx * dx;
            sxy += dx * (s.y - my);
        }
        const long double slope = sxy / sxx;
        fit.slope = static_cast<double>(slope);
        fit.intercept = static_cast<double>(my - slope * mx);
    }
    fit.r_squared = detail::r_squared(pts, fit.slope, fit.intercept);
    return fit;
}

/// Fits m = a * b^p by OLS on (log b, log m). R^2 is reported in log space.
inline PowerLawModel fit_power(std::span<const Sample> pts) {
    if (pts.size() < 2) throw ValidationError("insufficient data: power-law fit needs at least 2 points");
    std::vector<Sample> logs;
    logs.reserve(pts.size());
    for (const auto& s : pts) {
        if (!(s.x > 0.0) || !(s.y > 0.0)) throw ValidationError("non-positive input to power-law fit");
        logs.push_back({std::log(s.x), std::log(s.y)});
    }
    const auto line = fit_linear(logs, false);
    return {std::exp(line.intercept), line.slope, line.r_squared};
}

/// Fits c = A * e^(B b) by OLS on (b, log c). R^2 is reported in log space.
inline ExponentialModel fit_exponential(std::span<const Sample> pts) {
    if (pts.size() < 2) throw ValidationError("insufficient data: exponential fit needs at least 2 points");
    std::vector<Sample> logs;
    logs.reserve(pts.size());
    for (const auto& s : pts) {
        if (!(s.y > 0.0)) throw ValidationError("non-positive input to exponential fit");
        logs.push_back({s.x, std::log(s.y)});
    }
    const auto line = fit_linear(logs, false);
    return {std::exp(line.intercept), line.slope, line.r_squared};
}

/// Fits m = K / b as a through-origin regression of m on 1/b.
inline ReciprocalModel fit_reciprocal(std::span<const Sample> pts) {
    if (pts.size() < 2) throw ValidationError("insufficient data: reciprocal fit needs at least 2 points");
    std::vector<Sample> inv;
    inv.reserve(pts.size());
    for (const auto& s : pts) {
        if (!(s.x > 0.0)) throw ValidationError("non-positive bandwidth in reciprocal fit");
        inv.push_back({1.0 / s.x, s.y});
    }
    const auto line = fit_linear(inv, true);
    if (!(line.slope > 0.0)) throw ValidationError("reciprocal fit produced a non-positive numerator");
    return {line.slope, line.r_squared};
}

inline double predict_energy(const PredictionModel& model, double bandwidth_kbps, double data_size_bytes) {
    if (!(bandwidth_kbps > 0.0)) throw ValidationError("bandwidth must be positive");
    if (!(data_size_bytes >= 0.0)) throw ValidationError("data size must be nonnegative");
    return model.energy_slope(bandwidth_kbps) * data_size_bytes;
}

/// Nanoseconds.
inline double predict_time(const PredictionModel& model, double bandwidth_kbps, double data_size_bytes) {
    if (!(bandwidth_kbps > 0.0)) throw ValidationError("bandwidth must be positive");
    if (!(data_size_bytes >= 0.0)) throw ValidationError("data size must be nonnegative");
    return model.time_slope(bandwidth_kbps) * data_size_bytes + model.time_intercept(bandwidth_kbps);
}

// ---------------------------------------------------------------------------
// Multistep fitting

enum class Target { energy, time };

struct BandwidthGroup {
    double bandwidth_kbps = 0.0;
    std::vector<std::size_t> rows;  // indices into the trace list, in input order
};

/// Rounds to `digits` significant decimal digits.
inline double round_significant(double v, int digits = 6) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*e", digits - 1, v);
    return std::strtod(buf, nullptr);
}

/// Groups traces by bandwidth rounded to 6 significant digits, ascending.
inline std::vector<BandwidthGroup> group_by_bandwidth(std::span<const TraceRecord> traces) {
    std::map<double, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < traces.size(); ++i)
        groups[round_significant(traces[i].bandwidth_kbps)].push_back(i);
    std::vector<BandwidthGroup> out;
    out.reserve(groups.size());
    for (auto& [b, rows] : groups) out.push_back({b, std::move(rows)});
    return out;
}

namespace detail {

inline std::vector<Sample> group_samples(std::span<const TraceRecord> traces, std::span<const std::size_t> rows,
                                         Target target) {
    std::vector<Sample> pts;
    pts.reserve(rows.size());
    for (auto i : rows)
        pts.push_back({traces[i].data_size_bytes, target == Target::energy ? traces[i].energy_j : traces[i].time_ns});
    return pts;
}

inline LinearFit fit_group(std::span<const Sample> pts, Target target) {
    return fit_linear(pts, target == Target::energy);
}

}  // namespace detail

inline constexpr std::uint64_t default_cv_seed = 0x6b6e6e2d6376ULL;

/// k-fold cross-validation of the per-bandwidth linear model.
///
/// Each bandwidth group is shuffled (one seeded stream, groups in ascending
/// bandwidth order) and its shuffled positions are dealt round-robin into
/// `folds` folds, so both targets see the same folds for the same seed. For
/// each fold every group is refit on its training rows; the held-out rows of
/// all groups are pooled and scored with R^2. Returns the mean over folds.
inline double cross_validate(std::span<const TraceRecord> traces, std::size_t folds, Target target,
                             std::uint64_t seed = default_cv_seed) {
    if (folds < 2) throw ValidationError("insufficient data: cross-validation needs at least 2 folds");
    const auto groups = group_by_bandwidth(traces);
    if (groups.empty()) throw ValidationError("insufficient data: no traces to cross-validate");

    Rng rng(seed);
    std::vector<std::vector<std::size_t>> fold_of(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto n = groups[g].rows.size();
        if (n < folds)
            throw ValidationError("insufficient data: bandwidth group " + csv::format_real(groups[g].bandwidth_kbps) +
                                  " has " + std::to_string(n) + " points, fewer than " + std::to_string(folds) +
                                  " folds");
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);
        fold_of[g].resize(n);
        for (std::size_t j = 0; j < n; ++j) fold_of[g][order[j]] = j % folds;
    }

    double total = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<Sample> scored;  // (prediction, actual)
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const auto pts = detail::group_samples(traces, groups[g].rows, target);
            std::vector<Sample> train;
            for (std::size_t i = 0; i < pts.size(); ++i)
                if (fold_of[g][i] != f) train.push_back(pts[i]);
            const auto fit = detail::fit_group(train, target);
            for (std::size_t i = 0; i < pts.size(); ++i)
                if (fold_of[g][i] == f) scored.push_back({fit(pts[i].x), pts[i].y});
        }
        long double mean = 0.0L;
        for (const auto& s : scored) mean += s.y;
        mean /= static_cast<long double>(scored.size());
        long double ss_res = 0.0L;
        long double ss_tot = 0.0L;
        for (const auto& s : scored) {
            ss_res += (static_cast<long double>(s.y) - s.x) * (static_cast<long double>(s.y) - s.x);
            ss_tot += (s.y - mean) * (s.y - mean);
        }
        double score = 0.0;
        if (ss_tot == 0.0L)
            score = ss_res == 0.0L ? 1.0 : -std::numeric_limits<double>::infinity();
        else
            score = static_cast<double>(1.0L - ss_res / ss_tot);
        total += score;
    }
    return total / static_cast<double>(folds);
}

struct MultistepOptions {
    std::size_t cv_folds = 10;
    std::uint64_t cv_seed = default_cv_seed;
};

struct GroupFit {
    double bandwidth_kbps = 0.0;
    std::size_t points = 0;
    LinearFit energy;  // through the origin
    LinearFit time;
};

/// Everything fit_multistep computes, including per-bandwidth lines and a
/// free-exponent power fit of the time slopes for diagnostics.
struct MultistepReport {
    PredictionModel model;
    std::vector<GroupFit> groups;
    PowerLawModel time_slope_free;
};

inline MultistepReport fit_multistep_report(std::span<const TraceRecord> traces,
                                            const MultistepOptions& options = {}) {
    const auto groups = group_by_bandwidth(traces);
    if (groups.size() < 2)
        throw ValidationError("insufficient groups: need at least 2 distinct bandwidths, found " +
                              std::to_string(groups.size()));

    MultistepReport report;
    std::vector<Sample> energy_slopes, time_slopes, time_intercepts;
    for (const auto& g : groups) {
        const auto label = csv::format_real(g.bandwidth_kbps);
        auto energy_pts = detail::group_samples(traces, g.rows, Target::energy);
        auto time_pts = detail::group_samples(traces, g.rows, Target::time);
        bool distinct = false;
        for (const auto& s : energy_pts) distinct = distinct || s.x != energy_pts.front().x;
        if (!distinct)
            throw ValidationError("insufficient data: bandwidth group " + label +
                                  " needs at least 2 distinct data sizes");
        GroupFit fit{g.bandwidth_kbps, g.rows.size(), fit_linear(energy_pts, true), fit_linear(time_pts, false)};
        energy_slopes.push_back({g.bandwidth_kbps, fit.energy.slope});
        time_slopes.push_back({g.bandwidth_kbps, fit.time.slope});
        time_intercepts.push_back({g.bandwidth_kbps, fit.time.intercept});
        report.groups.push_back(fit);
    }

    auto& m = report.model;
    try {
        m.energy_slope = fit_power(energy_slopes);
        m.time_slope = fit_reciprocal(time_slopes);
        report.time_slope_free = fit_power(time_slopes);
        m.time_intercept = fit_exponential(time_intercepts);
    } catch (const ValidationError& e) {
        std::string where;
        for (const auto& g : report.groups) {
            if (!(g.energy.slope > 0.0)) where += " energy slope at " + csv::format_real(g.bandwidth_kbps) + ";";
            if (!(g.time.slope > 0.0)) where += " time slope at " + csv::format_real(g.bandwidth_kbps) + ";";
            if (!(g.time.intercept > 0.0))
                where += " time intercept " + csv::format_real(g.time.intercept) + " at " +
                         csv::format_real(g.bandwidth_kbps) + ";";
        }
        throw ValidationError(std::string(e.what()) + (where.empty() ? "" : " (non-positive:" + where + ")"));
    }
    m.cv_energy = cross_validate(traces, options.cv_folds, Target::energy, options.cv_seed);
    m.cv_time = cross_validate(traces, options.cv_folds, Target::time, options.cv_seed);
    return report;
}

/// Multistep regression: per-bandwidth lines of energy and time against data
/// size, then power-law, reciprocal and exponential models of their
/// coefficients against bandwidth.
inline PredictionModel fit_multistep(std::span<const TraceRecord> traces, const MultistepOptions& options = {}) {
    return fit_multistep_report(traces, options).model;
}

}  // namespace hyperoffload
