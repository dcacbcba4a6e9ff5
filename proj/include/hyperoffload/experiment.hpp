#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hyperoffload/csv.hpp"
#include "hyperoffload/error.hpp"
#include "hyperoffload/hyperprofile.hpp"
#include "hyperoffload/knn.hpp"
#include "hyperoffload/random.hpp"
#include "hyperoffload/regression.hpp"

namespace hyperoffload {

struct Interval {
    double mean = 0.0;
    double halfwidth = 0.0;
};

/// Mean and 95% normal-approximation halfwidth, 1.96 * s / sqrt(n), with s the
/// n-1 sample standard deviation.
inline Interval confidence_interval(std::span<const double> samples) {
    if (samples.size() < 2) throw ValidationError("insufficient samples: confidence interval needs at least 2");
    const auto n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    const double s = std::sqrt(ss / (n - 1.0));
    return {mean, 1.96 * s / std::sqrt(n)};
}

// ---------------------------------------------------------------------------
// Proposition check: for nonnegative p1, p2 with p1 strictly closer to the
// origin in L2 and p2 strictly closer in L1, p1 is the more balanced point,
// |x1 - y1| < |x2 - y2|.

enum class Prop1Verdict { holds, counterexample, preconditions_not_met };

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline Prop1Verdict check_proposition1(Point2 p1, Point2 p2) {
    const bool nonnegative = p1.x >= 0.0 && p1.y >= 0.0 && p2.x >= 0.0 && p2.y >= 0.0;
    const bool l2_prefers_p1 = p1.x * p1.x + p1.y * p1.y < p2.x * p2.x + p2.y * p2.y;
    const bool l1_prefers_p2 = p2.x + p2.y < p1.x + p1.y;
    if (!(nonnegative && l2_prefers_p1 && l1_prefers_p2)) return Prop1Verdict::preconditions_not_met;
    return std::abs(p1.x - p1.y) < std::abs(p2.x - p2.y) ? Prop1Verdict::holds : Prop1Verdict::counterexample;
}

struct PropositionRun {
    std::uint64_t pairs = 0;
    std::uint64_t satisfying = 0;  // pairs meeting all preconditions
    std::uint64_t counterexamples = 0;
};

/// Checks `pairs` random pairs drawn uniformly from [0, 1)^4.
inline PropositionRun run_proposition_check(std::uint64_t pairs, std::uint64_t seed) {
    if (pairs == 0) throw ValidationError("pair count must be at least 1");
    Rng rng(seed);
    PropositionRun run{pairs, 0, 0};
    for (std::uint64_t i = 0; i < pairs; ++i) {
        const Point2 p1{rng.uniform01(), rng.uniform01()};
        const Point2 p2{rng.uniform01(), rng.uniform01()};
        switch (check_proposition1(p1, p2)) {
            case Prop1Verdict::holds: ++run.satisfying; break;
            case Prop1Verdict::counterexample:
                ++run.satisfying;
                ++run.counterexamples;
                break;
            case Prop1Verdict::preconditions_not_met: break;
        }
    }
    return run;
}

// ---------------------------------------------------------------------------
// Random hyperprofiles and the metric-mismatch experiment

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct SamplingRanges {
    Range bandwidth_kbps{250.0, 15000.0};
    Range data_size_bytes{6.0e4, 2.5e8};

    void validate() const {
        if (!(bandwidth_kbps.lo > 0.0) || !(bandwidth_kbps.hi >= bandwidth_kbps.lo) || !std::isfinite(bandwidth_kbps.hi))
            throw ValidationError("invalid bandwidth range: need 0 < lo <= hi");
        if (!(data_size_bytes.lo >= 0.0) || !(data_size_bytes.hi >= data_size_bytes.lo) ||
            !std::isfinite(data_size_bytes.hi))
            throw ValidationError("invalid data size range: need 0 <= lo <= hi");
    }
};

/// Node ids are zero-padded so that lexicographic order matches creation order.
inline std::string random_node_id(std::size_t i, std::size_t n) {
    const auto width = std::to_string(n > 0 ? n - 1 : 0).size();
    auto digits = std::to_string(i);
    return "n" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

/// Divides every coordinate by its dimension's maximum over the profile.
inline Hyperprofile normalize_by_max(const Hyperprofile& profile) {
    std::vector<double> max(profile.dimension_count(), 0.0);
    for (const auto& p : profile.points())
        for (std::size_t d = 0; d < max.size(); ++d) max[d] = std::max(max[d], p.coords[d]);
    auto points = profile.points();
    for (auto& p : points)
        for (std::size_t d = 0; d < max.size(); ++d)
            if (max[d] > 0.0) p.coords[d] /= max[d];
    return {profile.dimensions(), std::move(points), profile.kind()};
}

/// n nodes with bandwidth and data size drawn uniformly (bandwidth first, per
/// point) and placed by the model's predictions.
inline Hyperprofile generate_random_hyperprofile(std::size_t n, const PredictionModel& model,
                                                 const SamplingRanges& ranges, Rng& rng) {
    if (n == 0) throw ValidationError("profile size must be at least 1");
    ranges.validate();
    std::vector<ProfilePoint> points;
    points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double b = rng.uniform(ranges.bandwidth_kbps.lo, ranges.bandwidth_kbps.hi);
        const double d = rng.uniform(ranges.data_size_bytes.lo, ranges.data_size_bytes.hi);
        points.push_back({random_node_id(i, n), {predict_energy(model, b, d), predict_time(model, b, d)}});
    }
    return {predicted_dimensions(), std::move(points), ProfileKind::hyper};
}

struct MismatchStats {
    std::size_t k = 0;
    double mean = 0.0;
    double ci_halfwidth = 0.0;
    std::size_t n_samples = 0;
};

struct ExperimentConfig {
    std::vector<std::size_t> profile_sizes{250, 500, 1000, 2000, 5000};
    std::vector<std::size_t> k_values{1, 2, 3, 4, 5, 10};
    SamplingRanges ranges;
    std::size_t trials_per_size = 50;
    std::uint64_t seed = 0;
    PredictionModel model = reference_model();
    bool normalize = false;   // per-dimension max-normalization before querying
    std::size_t threads = 1;  // results do not depend on this

    void validate() const {
        if (profile_sizes.empty()) throw ValidationError("no profile sizes given");
        if (k_values.empty()) throw ValidationError("no k values given");
        for (auto s : profile_sizes)
            if (s < 1) throw ValidationError("profile sizes must be at least 1");
        for (auto k : k_values)
            if (k < 1) throw ValidationError("k values must be at least 1");
        if (trials_per_size < 1) throw ValidationError("trials per size must be at least 1");
        if (profile_sizes.size() * trials_per_size < 2)
            throw ValidationError("need at least 2 pooled trials for a confidence interval");
        if (threads < 1) throw ValidationError("threads must be at least 1");
        ranges.validate();
        hyperoffload::validate(model);
    }
};

struct SizeBreakdown {
    std::size_t profile_size = 0;
    std::vector<MismatchStats> stats;  // one per k; empty when trials_per_size < 2
};

/// Pairwise check, for every mismatch, that each Euclidean-only point is more
/// balanced than each rectilinear-only point it displaced.
struct BalanceCheck {
    std::uint64_t pairs_checked = 0;  // preconditions met
    std::uint64_t pairs_skipped = 0;  // preconditions not met (e.g. exact ties)
    std::uint64_t violations = 0;
};

struct ExperimentResult {
    std::vector<MismatchStats> stats;  // pooled over sizes and trials, one per k
    std::vector<SizeBreakdown> per_size;
    BalanceCheck balance;
};

namespace detail {

struct TrialOutcome {
    std::vector<double> mismatches;  // one per k
    BalanceCheck balance;
};

inline TrialOutcome run_trial(const ExperimentConfig& cfg, std::size_t size, std::size_t trial) {
    Rng rng(derive_seed(cfg.seed, size, trial));
    auto profile = generate_random_hyperprofile(size, cfg.model, cfg.ranges, rng);
    if (cfg.normalize) profile = normalize_by_max(profile);
    const std::vector<double> origin(profile.dimension_count(), 0.0);

    TrialOutcome out;
    for (auto k : cfg.k_values) {
        const auto eu = knn_query(profile, origin, k, Metric::euclidean);
        const auto l1 = knn_query(profile, origin, k, Metric::rectilinear);
        const auto mismatches = mismatch_count(eu, l1);
        out.mismatches.push_back(static_cast<double>(mismatches));
        if (mismatches == 0) continue;

        std::set<std::string_view> in_eu, in_l1;
        for (const auto& h : eu.hits) in_eu.insert(h.node_id);
        for (const auto& h : l1.hits) in_l1.insert(h.node_id);
        std::vector<Point2> eu_only, l1_only;
        for (const auto& p : profile.points()) {
            const bool a = in_eu.count(p.node_id) > 0;
            const bool b = in_l1.count(p.node_id) > 0;
            if (a && !b) eu_only.push_back({p.coords[0], p.coords[1]});
            if (b && !a) l1_only.push_back({p.coords[0], p.coords[1]});
        }
        for (const auto& e : eu_only) {
            for (const auto& r : l1_only) {
                switch (check_proposition1(e, r)) {
                    case Prop1Verdict::holds: ++out.balance.pairs_checked; break;
                    case Prop1Verdict::counterexample:
                        ++out.balance.pairs_checked;
                        ++out.balance.violations;
                        break;
                    case Prop1Verdict::preconditions_not_met: ++out.balance.pairs_skipped; break;
                }
            }
        }
    }
    return out;
}

}  // namespace detail

/// Builds a fresh random hyperprofile per (size, trial), queries the origin
/// under both metrics for every k and counts mismatches. Each trial has its
/// own RNG stream derived from (seed, size, trial); outcomes are reduced in
/// (size, trial) order, so any thread count gives identical results.
inline ExperimentResult run_mismatch_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto n_sizes = cfg.profile_sizes.size();
    const auto n_trials = cfg.trials_per_size;
    std::vector<detail::TrialOutcome> outcomes(n_sizes * n_trials);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (std::size_t job = next++; job < outcomes.size(); job = next++) {
            try {
                outcomes[job] = detail::run_trial(cfg, cfg.profile_sizes[job / n_trials], job % n_trials);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const auto n_threads = std::min(cfg.threads, outcomes.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    ExperimentResult result;
    for (const auto& o : outcomes) {
        result.balance.pairs_checked += o.balance.pairs_checked;
        result.balance.pairs_skipped += o.balance.pairs_skipped;
        result.balance.violations += o.balance.violations;
    }
    for (std::size_t ki = 0; ki < cfg.k_values.size(); ++ki) {
        std::vector<double> pooled;
        pooled.reserve(outcomes.size());
        for (const auto& o : outcomes) pooled.push_back(o.mismatches[ki]);
        const auto ci = confidence_interval(pooled);
        result.stats.push_back({cfg.k_values[ki], ci.mean, ci.halfwidth, pooled.size()});
    }
    for (std::size_t si = 0; si < n_sizes; ++si) {
        SizeBreakdown breakdown{cfg.profile_sizes[si], {}};
        if (n_trials >= 2) {
            for (std::size_t ki = 0; ki < cfg.k_values.size(); ++ki) {
                std::vector<double> samples;
                for (std::size_t t = 0; t < n_trials; ++t) samples.push_back(outcomes[si * n_trials + t].mismatches[ki]);
                const auto ci = confidence_interval(samples);
                breakdown.stats.push_back({cfg.k_values[ki], ci.mean, ci.halfwidth, samples.size()});
            }
        }
        result.per_size.push_back(std::move(breakdown));
    }
    return result;
}

/// `k,mean_mismatch,ci_halfwidth,n_samples`
inline void write_experiment_csv(std::ostream& os, std::span<const MismatchStats> stats) {
    os << "k,mean_mismatch,ci_halfwidth,n_samples\n";
    for (const auto& s : stats)
        os << s.k << ',' << csv::format_real(s.mean) << ',' << csv::format_real(s.ci_halfwidth) << ',' << s.n_samples
           << '\n';
}

/// `profile_size,k,mean_mismatch,ci_halfwidth,n_samples`
inline void write_breakdown_csv(std::ostream& os, std::span<const SizeBreakdown> per_size) {
    os << "profile_size,k,mean_mismatch,ci_halfwidth,n_samples\n";
    for (const auto& b : per_size)
        for (const auto& s : b.stats)
            os << b.profile_size << ',' << s.k << ',' << csv::format_real(s.mean) << ','
               << csv::format_real(s.ci_halfwidth) << ',' << s.n_samples << '\n';
}

}  // namespace hyperoffload
