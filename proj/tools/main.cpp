// spatialcv command-line runner: config-driven thinning, SAC estimation,
// fold construction, tuning, full experiments, virtual-species simulation
// and report regeneration. Every subcommand reads and writes files only.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "spatialcv/common.hpp"
#include "spatialcv/dataset.hpp"
#include "spatialcv/experiment.hpp"
#include "spatialcv/geo.hpp"
#include "spatialcv/simulate.hpp"
#include "spatialcv/smote.hpp"
#include "spatialcv/variogram.hpp"

namespace fs = std::filesystem;
using namespace spcv;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::string only;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config = true) {
    auto* opt = cmd->add_option("--config", args.config_path, "experiment config (JSON)");
    if (needs_config) opt->required();
    cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&args](std::uint64_t v) { args.seed = v; },
        "global seed override (re-derives every configured seed)");
    cmd->add_option("--jobs", args.jobs, "parallel worker hint");
    cmd->add_option("--only", args.only, "cell filter, e.g. scheme=sp_422,learner=gbm");
}

ExperimentConfig load_config(const CommonArgs& args) {
    ExperimentConfig cfg = ExperimentConfig::from_file(args.config_path);
    if (args.seed) cfg.override_seeds(*args.seed);
    return cfg;
}

void parse_only(const std::string& only, RunOptions& opts) {
    std::size_t pos = 0;
    while (pos < only.size()) {
        std::size_t comma = only.find(',', pos);
        if (comma == std::string::npos) comma = only.size();
        const std::string part = only.substr(pos, comma - pos);
        const std::size_t eq = part.find('=');
        require(eq != std::string::npos, "--only: expected key=value, got '" + part + "'");
        const std::string key = part.substr(0, eq);
        const std::string value = part.substr(eq + 1);
        if (key == "scheme") opts.only_scheme = value;
        else if (key == "learner") opts.only_learner = value;
        else throw Error("--only: unknown key '" + key + "'");
        pos = comma + 1;
    }
}

Dataset load_data(const ExperimentConfig& cfg, IngestSummary* summary = nullptr) {
    require(!cfg.data_path.empty(), "config lacks a data section");
    IngestSummary local;
    Dataset d = load_csv(cfg.data_path, cfg.schema, &local);
    std::cerr << local.to_log_line() << '\n';
    if (summary) *summary = local;
    return d;
}

/// Dataset the CV machinery operates on: the in-time slice when a temporal
/// split is configured, the full table otherwise.
Dataset modeling_data(const ExperimentConfig& cfg, const Dataset& full) {
    if (!cfg.split) return full;
    return temporal_split(full, *cfg.split).in_time;
}

int cmd_thin(const CommonArgs& args) {
    const ExperimentConfig cfg = load_config(args);
    const Dataset d = load_data(cfg);
    fs::create_directories(args.out_dir);

    const std::vector<std::int64_t> kept = thin(d, cfg.thin.min_dist_m, cfg.thin.seed);
    {
        std::ofstream out(args.out_dir + "/retained_ids.csv", std::ios::binary);
        require(out.good(), "cannot write retained_ids.csv");
        out << "id\n";
        for (std::int64_t id : kept) out << id << '\n';
    }
    write_dataset_csv(d.subset(kept), args.out_dir + "/thinned_data.csv", cfg.schema);
    std::cout << "thin: retained " << kept.size() << " of " << d.size() << " records (min_dist_m="
              << fmt_double(cfg.thin.min_dist_m) << ")\n";
    return 0;
}

int cmd_sac_range(const CommonArgs& args) {
    const ExperimentConfig cfg = load_config(args);
    const Dataset full = load_data(cfg);
    const Dataset d = modeling_data(cfg, full);
    fs::create_directories(args.out_dir);

    SacOptions opts = cfg.sac;
    if (!cfg.continuous_features.empty()) {
        for (const std::string& name : cfg.continuous_features) {
            const int idx = d.feature_index(name);
            require(idx >= 0, "continuous_features: unknown feature '" + name + "'");
            opts.continuous_features.push_back(static_cast<std::size_t>(idx));
        }
    }
    const SacResult res = sac_range(d, opts);
    res.write_csv(args.out_dir + "/sac_range.csv");
    std::cout << "sac-range: median effective range " << fmt_double(res.range_km) << " km over "
              << res.per_feature.size() << " feature(s)\n";
    return 0;
}

int cmd_split(const CommonArgs& args) {
    const ExperimentConfig cfg = load_config(args);
    require(!cfg.schemes.empty(), "config lists no schemes");
    const Dataset full = load_data(cfg);
    const Dataset d = modeling_data(cfg, full);
    fs::create_directories(args.out_dir + "/folds");

    int failures = 0;
    for (const SchemeConfig& sc : cfg.schemes) {
        try {
            const FoldPlan plan = build_plan(sc, d);
            plan.write_csv(args.out_dir + "/folds/" + sc.name + ".csv");
            plan.write_json(args.out_dir + "/folds/" + sc.name + ".json");
            std::cout << "split: " << sc.name << " -> " << plan.folds.size() << " folds\n";
        } catch (const std::exception& e) {
            std::cerr << "split: " << sc.name << " failed: " << e.what() << '\n';
            ++failures;
        }
    }
    return failures == 0 ? 0 : (failures == static_cast<int>(cfg.schemes.size()) ? 1 : 2);
}

int run_with_options(const CommonArgs& args, bool evaluate_tests) {
    const ExperimentConfig cfg = load_config(args);
    RunOptions opts;
    opts.out_dir = args.out_dir;
    opts.jobs = args.jobs;
    opts.seed_override = std::nullopt;  // seeds already applied by load_config
    opts.evaluate_tests = evaluate_tests;
    parse_only(args.only, opts);

    const RunResult res = run_experiment(cfg, opts);
    for (const CellStatus& c : res.cells) {
        if (!c.ok) std::cerr << "cell (" << c.scheme << ", " << c.learner << ") failed: " << c.error << '\n';
    }
    std::cout << (evaluate_tests ? "run" : "tune") << ": wrote " << res.out_dir << " ("
              << res.cells.size() << " cells)\n";
    return res.exit_code;
}

int cmd_simulate(const CommonArgs& args) {
    const ExperimentConfig cfg = load_config(args);
    require(cfg.virtual_species.has_value(), "config lacks a virtual_species section");
    fs::create_directories(args.out_dir);

    const Dataset d = simulate_virtual_species(*cfg.virtual_species);
    CsvSchema schema;
    schema.lon_column = "lon";
    schema.lat_column = "lat";
    schema.year_column = "year";
    schema.label_column = "label";
    write_dataset_csv(d, args.out_dir + "/simulated.csv", schema);
    const ClassCounts cc = class_counts(d);
    std::cout << "simulate: " << d.size() << " records, prevalence "
              << fmt_double(static_cast<double>(cc.n_presence) / static_cast<double>(d.size()))
              << '\n';
    return 0;
}

int cmd_report(const CommonArgs& args) {
    emit_report(args.out_dir);
    std::cout << "report: derived tables rewritten in " << args.out_dir << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SAC-aware cross-validation toolkit for presence/absence geodata"};
    app.require_subcommand(1);

    CommonArgs thin_args, sac_args, split_args, tune_args, run_args, sim_args, report_args;

    add_common(app.add_subcommand("thin", "spatially thin a dataset"), thin_args);
    add_common(app.add_subcommand("sac-range", "estimate the SAC range via variograms"), sac_args);
    add_common(app.add_subcommand("split", "build and serialize fold plans"), split_args);
    add_common(app.add_subcommand("tune", "random search without test-set scoring"), tune_args);
    add_common(app.add_subcommand("run", "full experiment with robustness report"), run_args);
    add_common(app.add_subcommand("simulate", "generate a virtual-species dataset"), sim_args);
    add_common(app.add_subcommand("report", "recompute derived tables from a bundle"), report_args,
               /*needs_config=*/false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("thin")) return cmd_thin(thin_args);
        if (app.got_subcommand("sac-range")) return cmd_sac_range(sac_args);
        if (app.got_subcommand("split")) return cmd_split(split_args);
        if (app.got_subcommand("tune")) return run_with_options(tune_args, false);
        if (app.got_subcommand("run")) return run_with_options(run_args, true);
        if (app.got_subcommand("simulate")) return cmd_simulate(sim_args);
        if (app.got_subcommand("report")) return cmd_report(report_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
