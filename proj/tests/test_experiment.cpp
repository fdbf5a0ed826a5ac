#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "spatialcv/csv.hpp"
#include "spatialcv/dataset.hpp"
#include "spatialcv/experiment.hpp"
#include "spatialcv/simulate.hpp"

namespace fs = std::filesystem;
using namespace spcv;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Writes a small simulated dataset and a matching experiment config; returns
/// the config path.
std::string prepare_minimal_experiment(const std::string& dir, std::size_t n_configs = 2) {
    fs::create_directories(dir);
    VirtualSpeciesParams p;
    p.n_points = 260;
    p.lon_min = 0.0;
    p.lon_max = 3.0;
    p.lat_min = -1.5;
    p.lat_max = 1.5;
    p.range_km = 120.0;
    p.n_env_features = 2;
    p.coefficients = {1.5, 1.0};
    p.noise_rate = 0.1;
    p.year_min = 2000;
    p.year_max = 2009;
    p.seed = 99;
    const Dataset d = simulate_virtual_species(p);
    CsvSchema schema{"lon", "lat", "year", "label", {}};
    write_dataset_csv(d, dir + "/data.csv", schema);

    nlohmann::json cfg;
    cfg["data"] = {{"path", dir + "/data.csv"},
                   {"schema",
                    {{"lon", "lon"},
                     {"lat", "lat"},
                     {"year", "year"},
                     {"label", "label"},
                     {"features", {"env_0", "env_1"}}}}};
    cfg["temporal_split"] = {{"train_years", {2000, 2007}}, {"test_years", {2008, 2009}}};
    cfg["schemes"] = nlohmann::json::array(
        {{{"name", "random"}, {"type", "random"}, {"k", 3}, {"seed", 4}},
         {{"name", "sp_120"}, {"type", "spatial"}, {"k", 3}, {"block_km", 120.0}, {"seed", 4}}});
    cfg["learners"] = nlohmann::json::array(
        {{{"name", "gbm"},
          {"kind", "gbm"},
          {"space",
           {{"n_trees", {{"lo", 10}, {"hi", 30}}}, {"max_depth", {{"lo", 2}, {"hi", 3}}}}}},
         {{"name", "rf"},
          {"kind", "rf"},
          {"space",
           {{"n_trees", {{"lo", 10}, {"hi", 20}}}, {"max_depth", {{"lo", 3}, {"hi", 5}}}}}}});
    cfg["search"] = {{"n_configs", n_configs}, {"seed", 11}};
    cfg["smote"] = {{"target_presence_ratio", 0.45}, {"k_neighbors", 3}, {"seed", 5}};
    cfg["strategies"] = {"retrain", "last_fold"};

    const std::string path = dir + "/config.json";
    std::ofstream out(path);
    out << cfg.dump(2);
    return path;
}

}  // namespace

TEST_CASE("minimal experiment produces the full bundle") {
    const std::string dir = "/tmp/spatialcv_test_run";
    fs::remove_all(dir);
    const std::string cfg_path = prepare_minimal_experiment(dir);

    const ExperimentConfig cfg = ExperimentConfig::from_file(cfg_path);
    RunOptions opts;
    opts.out_dir = dir + "/out";
    opts.jobs = 2;
    const RunResult res = run_experiment(cfg, opts);
    CHECK(res.exit_code == 0);
    CHECK(res.cells.size() == 4);  // 2 schemes x 2 learners
    for (const CellStatus& c : res.cells) CHECK(c.ok);

    for (const char* name :
         {"manifest.json", "configs.csv", "search_results.csv", "summary.csv", "selected.csv",
          "robustness.csv", "oracle_table.csv", "scatter.csv", "fig2_summary.csv",
          "folds/random.csv", "folds/random.json", "folds/sp_120.csv", "folds/sp_120.json"}) {
        CHECK(fs::exists(dir + "/out/" + name));
    }

    // summary.csv: 2 schemes x 2 learners x 2 configs rows.
    const csv::Table summary = csv::read_file(dir + "/out/summary.csv");
    CHECK(summary.rows.size() == 8);
    CHECK(summary.column("mean_val_auc") >= 0);
    CHECK(summary.column("test_auc_retrain") >= 0);
    CHECK(summary.column("test_auc_lastfold") >= 0);

    // search_results.csv: 3 folds per (scheme, learner, config).
    const csv::Table search = csv::read_file(dir + "/out/search_results.csv");
    CHECK(search.rows.size() == 8 * 3);

    // scatter.csv carries the declared column schema.
    const csv::Table scatter = csv::read_file(dir + "/out/scatter.csv");
    CHECK(scatter.header ==
          std::vector<std::string>{"scheme", "strategy", "learner", "config_id", "val_auc",
                                   "test_auc"});

    // oracle_table.csv: strategy x scheme rows with one column per learner.
    const csv::Table oracle_t = csv::read_file(dir + "/out/oracle_table.csv");
    CHECK(oracle_t.header ==
          std::vector<std::string>{"strategy", "scheme", "gbm", "rf", "average"});
    CHECK(oracle_t.rows.size() == 4);  // 2 strategies x 2 schemes

    // fig2 summary exposes the IQR columns.
    const csv::Table fig2 = csv::read_file(dir + "/out/fig2_summary.csv");
    CHECK(fig2.column("mae_iqr_low") >= 0);
    CHECK(fig2.column("mae_iqr_high") >= 0);

    // RETRAIN test AUC for a given (learner, config) is scheme-independent.
    const int c_scheme = summary.column("scheme");
    const int c_learner = summary.column("learner");
    const int c_cfgid = summary.column("config_id");
    const int c_retr = summary.column("test_auc_retrain");
    std::map<std::string, std::string> retrain_by_key;
    for (const auto& row : summary.rows) {
        const std::string key = row[static_cast<std::size_t>(c_learner)] + "#" +
                                row[static_cast<std::size_t>(c_cfgid)];
        const std::string val = row[static_cast<std::size_t>(c_retr)];
        auto [it, inserted] = retrain_by_key.emplace(key, val);
        if (!inserted) CHECK(it->second == val);
        (void)c_scheme;
    }
}

TEST_CASE("rerunning the same config yields byte-identical outputs") {
    const std::string dir = "/tmp/spatialcv_test_determinism";
    fs::remove_all(dir);
    const std::string cfg_path = prepare_minimal_experiment(dir);
    const ExperimentConfig cfg = ExperimentConfig::from_file(cfg_path);

    RunOptions a, b;
    a.out_dir = dir + "/a";
    a.jobs = 1;
    b.out_dir = dir + "/b";
    b.jobs = 3;  // scheduling must not leak into the outputs
    CHECK(run_experiment(cfg, a).exit_code == 0);
    CHECK(run_experiment(cfg, b).exit_code == 0);

    for (const char* name :
         {"configs.csv", "search_results.csv", "summary.csv", "selected.csv", "robustness.csv",
          "oracle_table.csv", "scatter.csv", "fig2_summary.csv", "folds/random.csv",
          "folds/sp_120.csv"}) {
        CHECK(slurp(dir + "/a/" + name) == slurp(dir + "/b/" + name));
    }
}

TEST_CASE("emit_report rebuilds identical derived tables from summary.csv") {
    const std::string dir = "/tmp/spatialcv_test_report";
    fs::remove_all(dir);
    const std::string cfg_path = prepare_minimal_experiment(dir);
    const ExperimentConfig cfg = ExperimentConfig::from_file(cfg_path);
    RunOptions opts;
    opts.out_dir = dir + "/out";
    REQUIRE(run_experiment(cfg, opts).exit_code == 0);

    std::map<std::string, std::string> before;
    for (const char* name : {"robustness.csv", "oracle_table.csv", "scatter.csv", "fig2_summary.csv"}) {
        before[name] = slurp(dir + "/out/" + name);
        fs::remove(dir + "/out/" + name);
    }
    emit_report(dir + "/out");
    for (const auto& [name, content] : before) {
        CHECK(slurp(dir + "/out/" + name) == content);
    }
}

TEST_CASE("cell filters restrict the run") {
    const std::string dir = "/tmp/spatialcv_test_only";
    fs::remove_all(dir);
    const std::string cfg_path = prepare_minimal_experiment(dir);
    const ExperimentConfig cfg = ExperimentConfig::from_file(cfg_path);
    RunOptions opts;
    opts.out_dir = dir + "/out";
    opts.only_scheme = "random";
    opts.only_learner = "gbm";
    const RunResult res = run_experiment(cfg, opts);
    CHECK(res.cells.size() == 1);
    CHECK(res.cells[0].scheme == "random");
    CHECK(res.cells[0].learner == "gbm");

    opts.only_scheme = "does_not_exist";
    CHECK_THROWS_AS(run_experiment(cfg, opts), Error);
}

TEST_CASE("config parsing rejects unknown names") {
    nlohmann::json bad;
    bad["schemes"] = nlohmann::json::array({{{"name", "x"}, {"type", "hexagonal"}, {"k", 3}}});
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), Error);

    nlohmann::json bad2;
    bad2["strategies"] = {"retrain", "warm_start"};
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad2), Error);
}

TEST_CASE("seed override rewires every configured seed deterministically") {
    const std::string dir = "/tmp/spatialcv_test_seed";
    fs::remove_all(dir);
    const std::string cfg_path = prepare_minimal_experiment(dir);
    ExperimentConfig cfg = ExperimentConfig::from_file(cfg_path);
    const std::uint64_t original = cfg.schemes[0].seed;
    cfg.override_seeds(777);
    CHECK(cfg.schemes[0].seed != original);
    ExperimentConfig cfg2 = ExperimentConfig::from_file(cfg_path);
    cfg2.override_seeds(777);
    CHECK(cfg.schemes[0].seed == cfg2.schemes[0].seed);
    CHECK(cfg.search_seed == cfg2.search_seed);
}
