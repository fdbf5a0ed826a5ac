#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spatialcv/dataset.hpp"
#include "spatialcv/simulate.hpp"
#include "spatialcv/splitters.hpp"
#include "spatialcv/tuning.hpp"
#include "spatialcv/variogram.hpp"

namespace spcv {

struct SchemeConfig {
    std::string name;
    Scheme type = Scheme::kRandom;
    std::size_t k = 5;
    double block_km = 0.0;
    std::size_t k_spatial = 5;
    TemporalIntervals intervals;
    std::uint64_t seed = 0;
};

struct LearnerConfig {
    std::string name;
    LearnerKind kind = LearnerKind::kGbm;
    HyperparamSpace space;
};

struct ThinConfig {
    double min_dist_m = 500.0;
    std::uint64_t seed = 0;
};

/// One experiment: data source, temporal split, CV schemes, learners,
/// search size, SMOTE, and the final-model strategies to run.
struct ExperimentConfig {
    std::string data_path;
    CsvSchema schema;
    std::optional<TemporalSplitSpec> split;
    std::vector<std::string> continuous_features;

    std::vector<SchemeConfig> schemes;
    std::vector<LearnerConfig> learners;
    std::size_t n_configs = 100;
    std::uint64_t search_seed = 0;
    std::optional<SmoteConfig> smote;
    std::vector<Strategy> strategies;

    ThinConfig thin;
    SacOptions sac;
    std::optional<VirtualSpeciesParams> virtual_species;

    nlohmann::json raw;  // parsed source, kept for hashing and the manifest

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::string& path);

    /// Replaces every seed with a value derived from the global seed.
    void override_seeds(std::uint64_t global_seed);
};

/// Builds the FoldPlan a scheme config describes, on the given dataset.
FoldPlan build_plan(const SchemeConfig& sc, const Dataset& d);

struct RunOptions {
    std::string out_dir;
    int jobs = 1;
    std::optional<std::uint64_t> seed_override;
    std::string only_scheme;   // empty: all
    std::string only_learner;  // empty: all
    bool evaluate_tests = true;  // false: tune only (no out-of-time scoring)
};

struct CellStatus {
    std::string scheme;
    std::string learner;
    bool ok = true;
    std::string error;
};

struct RunResult {
    int exit_code = 0;  // 0 ok, 2 partial failures
    std::vector<CellStatus> cells;
    std::string out_dir;
};

/// Runs the full experiment: fold plans, random search, per-config
/// finalization under each strategy, out-of-time scoring, robustness
/// reports, and plot-ready tables. One failing (scheme, learner) cell is
/// recorded and skipped, never fatal.
RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

/// Recomputes the derived tables (robustness, oracle, scatter, fig-style
/// summary) from an existing bundle's summary.csv.
void emit_report(const std::string& bundle_dir);

}  // namespace spcv
