// hyperoffload: command-line front end for trace generation, model fitting,
// hyperprofile queries and the metric-mismatch experiment.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error, 3 internal
// invariant violation.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "hyperoffload/hyperoffload.hpp"

namespace ho = hyperoffload;

namespace {

/// Six significant digits, for human-facing output.
std::string sig6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string sig10(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

/// Runs `write` against the --out file, or stdout when no path was given.
void emit(const std::string& path, const std::function<void(std::ostream&)>& write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ho::IoError("cannot open " + path + " for writing");
    write(os);
    if (!os) throw ho::IoError("failed writing " + path);
}

struct GenDataArgs {
    std::uint64_t seed = 0;
    double noise = 0.0;
    std::string out;
    std::vector<double> bandwidths;
    std::vector<double> data_sizes;
    bool include_distance = false;
    std::vector<double> distance_range{10.0, 100.0};
};

int cmd_gen_data(const GenDataArgs& a) {
    ho::GeneratorConfig cfg;
    cfg.seed = a.seed;
    cfg.noise_rel_sigma = a.noise;
    if (!a.bandwidths.empty()) cfg.bandwidth_grid = a.bandwidths;
    if (!a.data_sizes.empty()) cfg.data_size_grid = a.data_sizes;
    cfg.include_distance = a.include_distance;
    cfg.distance_range_m = {a.distance_range.at(0), a.distance_range.at(1)};
    const auto traces = ho::gen_traces(cfg);
    emit(a.out, [&](std::ostream& os) { ho::write_traces(os, traces); });
    std::cerr << "wrote " << traces.size() << " trace records\n";
    return 0;
}

struct FitArgs {
    std::string traces;
    std::string out;
    std::size_t cv_folds = 10;
    std::uint64_t cv_seed = ho::default_cv_seed;
};

void print_fit_summary(std::ostream& os, const ho::MultistepReport& r, std::size_t folds) {
    const auto& m = r.model;
    os << "Energy consumption (J):  e = m1 * d\n"
       << "  m1 = a * b^p        a = " << sig10(m.energy_slope.a) << "  p = " << sig10(m.energy_slope.p)
       << "  R^2 = " << sig6(m.energy_slope.r_squared) << '\n'
       << "  cross-validation (" << folds << "-fold): " << sig6(m.cv_energy) << '\n'
       << "Time (ns):  t = m2 * d + c\n"
       << "  m2 = K / b          K = " << sig10(m.time_slope.numerator) << "  R^2 = " << sig6(m.time_slope.r_squared)
       << '\n'
       << "  c  = A * e^(B * b)  A = " << sig10(m.time_intercept.amplitude)
       << "  B = " << sig10(m.time_intercept.rate) << "  R^2 = " << sig6(m.time_intercept.r_squared) << '\n'
       << "  cross-validation (" << folds << "-fold): " << sig6(m.cv_time) << '\n'
       << "  free-exponent check: m2 = " << sig6(r.time_slope_free.a) << " * b^" << sig6(r.time_slope_free.p)
       << '\n'
       << "Per-bandwidth lines:\n"
       << "  bandwidth_kbps  points  m1_j_per_byte  m2_s_per_byte  c_s  energy_r2  time_r2\n";
    for (const auto& g : r.groups)
        os << "  " << sig6(g.bandwidth_kbps) << "  " << g.points << "  " << sig6(g.energy.slope) << "  "
           << sig6(g.time.slope * 1e-9) << "  " << sig6(g.time.intercept * 1e-9) << "  " << sig6(g.energy.r_squared)
           << "  " << sig6(g.time.r_squared) << '\n';
}

int cmd_fit(const FitArgs& a) {
    const auto traces = ho::ingest_traces(a.traces);
    const auto report = ho::fit_multistep_report(traces, {a.cv_folds, a.cv_seed});
    if (!a.out.empty()) ho::save_model(a.out, report.model);
    print_fit_summary(std::cout, report, a.cv_folds);
    return 0;
}

struct PredictArgs {
    std::string model;
    double bandwidth = 0.0;
    double data_size = 0.0;
};

int cmd_predict(const PredictArgs& a) {
    const auto model = ho::load_model(a.model);
    const double e = ho::predict_energy(model, a.bandwidth, a.data_size);
    const double t = ho::predict_time(model, a.bandwidth, a.data_size);
    std::cout << "bandwidth_kbps,data_size_bytes,energy_j,time_ns\n"
              << ho::csv::format_real(a.bandwidth) << ',' << ho::csv::format_real(a.data_size) << ','
              << ho::csv::format_real(e) << ',' << ho::csv::format_real(t) << '\n';
    std::cerr << "energy " << sig6(e) << " J, time " << sig6(t * 1e-9) << " s\n";
    return 0;
}

struct QueryArgs {
    std::string model;
    std::string fleet;
    double data_size = 0.0;
    std::size_t k = 1;
    std::string metric = "euclidean";
    std::string profile_out;
};

int cmd_query(const QueryArgs& a) {
    const auto metric = ho::parse_metric(a.metric);
    if (!metric) throw ho::ValidationError("invalid metric '" + a.metric + "'; valid metrics: euclidean, rectilinear");
    if (a.k == 0) throw ho::ValidationError("--k must be at least 1");
    const auto model = ho::load_model(a.model);
    const auto fleet = ho::load_fleet(a.fleet);
    const auto profile = ho::build_hyperprofile(fleet, {a.data_size, a.k}, model);
    if (!a.profile_out.empty()) emit(a.profile_out, [&](std::ostream& os) { ho::write_profile_csv(os, profile); });
    if (a.k > profile.size())
        std::cerr << "warning: k = " << a.k << " exceeds fleet size " << profile.size()
                  << "; returning the whole fleet\n";
    const std::vector<double> origin(profile.dimension_count(), 0.0);
    const auto result = ho::knn_query(profile, origin, a.k, *metric);

    std::map<std::string_view, const ho::ProfilePoint*> by_id;
    for (const auto& p : profile.points()) by_id[p.node_id] = &p;
    std::cout << "node_id,distance,energy_j,time_s\n";
    for (const auto& h : result.hits) {
        const auto* p = by_id.at(h.node_id);
        std::cout << h.node_id << ',' << ho::csv::format_real(h.distance) << ',' << sig6(p->coords[0]) << ','
                  << sig6(p->coords[1] * 1e-9) << '\n';
    }
    return 0;
}

struct ExperimentArgs {
    std::string model;
    std::string out;
    std::vector<std::size_t> sizes;
    std::vector<std::size_t> k;
    std::size_t trials = 50;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    bool normalize = false;
    std::string per_size_out;
};

int cmd_experiment(const ExperimentArgs& a) {
    ho::ExperimentConfig cfg;
    if (!a.model.empty()) cfg.model = ho::load_model(a.model);
    if (!a.sizes.empty()) cfg.profile_sizes = a.sizes;
    if (!a.k.empty()) cfg.k_values = a.k;
    cfg.trials_per_size = a.trials;
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    cfg.normalize = a.normalize;
    const auto result = ho::run_mismatch_experiment(cfg);
    emit(a.out, [&](std::ostream& os) { ho::write_experiment_csv(os, result.stats); });
    if (!a.per_size_out.empty())
        emit(a.per_size_out, [&](std::ostream& os) { ho::write_breakdown_csv(os, result.per_size); });
    std::cerr << "balance check: " << result.balance.pairs_checked << " mismatch pairs checked, "
              << result.balance.violations << " violations, " << result.balance.pairs_skipped << " skipped\n";
    if (result.balance.violations > 0)
        throw ho::InvariantError("a Euclidean-only point was less balanced than the point it displaced");
    return 0;
}

struct PropCheckArgs {
    std::uint64_t pairs = 1000000;
    std::uint64_t seed = 0;
};

int cmd_prop_check(const PropCheckArgs& a) {
    const auto run = ho::run_proposition_check(a.pairs, a.seed);
    std::cout << run.counterexamples << " counterexamples / " << run.satisfying
              << " precondition-satisfying pairs (" << run.pairs << " pairs drawn, seed " << a.seed << ")\n";
    if (run.counterexamples > 0) throw ho::InvariantError("counterexample found");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hyperprofile-based computation offloading"};
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate synthetic trace CSV");
    gen_cmd->add_option("--seed", gen.seed, "RNG seed");
    gen_cmd->add_option("--noise", gen.noise, "Relative std-dev of multiplicative noise");
    gen_cmd->add_option("--out", gen.out, "Output CSV (default stdout)");
    gen_cmd->add_option("--bandwidths", gen.bandwidths, "Bandwidth grid, Kbps");
    gen_cmd->add_option("--data-sizes", gen.data_sizes, "Data size grid, bytes");
    gen_cmd->add_flag("--include-distance", gen.include_distance, "Add a random distance_m column");
    gen_cmd->add_option("--distance-range", gen.distance_range, "Distance range, meters")->expected(2);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit the multistep model to a trace CSV");
    fit_cmd->add_option("--traces", fit.traces, "Trace CSV")->required();
    fit_cmd->add_option("--out", fit.out, "Model JSON to write");
    fit_cmd->add_option("--cv-folds", fit.cv_folds, "Cross-validation folds");
    fit_cmd->add_option("--cv-seed", fit.cv_seed, "Cross-validation shuffle seed");

    PredictArgs pred;
    auto* pred_cmd = app.add_subcommand("predict", "Predict energy and time for one transfer");
    pred_cmd->add_option("--model", pred.model, "Model JSON")->required();
    pred_cmd->add_option("--bandwidth", pred.bandwidth, "Bandwidth, Kbps")->required();
    pred_cmd->add_option("--data-size", pred.data_size, "Data size, bytes")->required();

    QueryArgs query;
    auto* query_cmd = app.add_subcommand("query", "Select offloading nodes with a kNN query at the origin");
    query_cmd->add_option("--model", query.model, "Model JSON")->required();
    query_cmd->add_option("--fleet", query.fleet, "Fleet CSV: node_id,bandwidth_kbps[,name=value;...]")->required();
    query_cmd->add_option("--data-size", query.data_size, "Task data size, bytes")->required();
    query_cmd->add_option("--k", query.k, "Number of nodes to select");
    query_cmd->add_option("--metric", query.metric, "euclidean | rectilinear");
    query_cmd->add_option("--profile-out", query.profile_out, "Also write the hyperprofile CSV here");

    ExperimentArgs exp;
    auto* exp_cmd = app.add_subcommand("experiment", "Euclidean vs rectilinear mismatch experiment");
    exp_cmd->add_option("--model", exp.model, "Model JSON (default: reference model)");
    exp_cmd->add_option("--out", exp.out, "Output CSV (default stdout)");
    exp_cmd->add_option("--sizes", exp.sizes, "Profile sizes");
    exp_cmd->add_option("--k", exp.k, "Query sizes");
    exp_cmd->add_option("--trials", exp.trials, "Trials per profile size");
    exp_cmd->add_option("--seed", exp.seed, "RNG seed");
    exp_cmd->add_option("--threads", exp.threads, "Worker threads (output does not depend on this)");
    exp_cmd->add_flag("--normalize", exp.normalize, "Max-normalize each dimension before querying");
    exp_cmd->add_option("--per-size", exp.per_size_out, "Also write per-size breakdown CSV here");

    PropCheckArgs prop;
    auto* prop_cmd = app.add_subcommand("prop-check", "Random test of the L1/L2 balance proposition");
    prop_cmd->add_option("--pairs", prop.pairs, "Number of random point pairs");
    prop_cmd->add_option("--seed", prop.seed, "RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*gen_cmd) return cmd_gen_data(gen);
        if (*fit_cmd) return cmd_fit(fit);
        if (*pred_cmd) return cmd_predict(pred);
        if (*query_cmd) return cmd_query(query);
        if (*exp_cmd) return cmd_experiment(exp);
        if (*prop_cmd) return cmd_prop_check(prop);
    } catch (const ho::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        switch (e.kind()) {
            case ho::ErrorKind::validation: return 1;
            case ho::ErrorKind::io: return 2;
            case ho::ErrorKind::internal: return 3;
        }
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
    return 3;
}
