#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spatialcv/dataset.hpp"
#include "spatialcv/learners.hpp"
#include "spatialcv/smote.hpp"
#include "spatialcv/splitters.hpp"

namespace spcv {

struct ParamRange {
    enum class Kind { kInt, kReal, kLogReal };
    Kind kind = Kind::kReal;
    double lo = 0.0;
    double hi = 0.0;
};

/// Named hyperparameter ranges for one learner kind. The stock ranges are
/// conventional stand-ins; configs may substitute their own.
struct HyperparamSpace {
    LearnerKind kind = LearnerKind::kGbm;
    std::map<std::string, ParamRange> ranges;  // map order is the draw order

    static HyperparamSpace defaults(LearnerKind kind);
    void apply_overrides(const nlohmann::json& overrides);
    nlohmann::json to_json() const;
};

/// n independent seeded draws, uniform per dimension (log-uniform where
/// declared). Duplicates allowed. Each config gets seed mix(seed, index).
std::vector<LearnerSpec> sample_configs(const HyperparamSpace& space, std::size_t n,
                                        std::uint64_t seed);

/// Sets one named hyperparameter on a spec (integers are rounded).
void set_learner_param(LearnerSpec& spec, const std::string& name, double value);

struct FoldScore {
    double auc = 0.0;
    bool skipped = false;  // single-class validation fold
};

struct ConfigEval {
    std::size_t config_id = 0;
    LearnerSpec spec;
    std::vector<FoldScore> folds;
    double mean_val_auc = 0.0;  // over non-skipped folds
    std::size_t n_skipped = 0;
};

/// Per-config search rows plus per-strategy test scores, filled by the
/// runner (NaN until computed).
struct SearchResult {
    std::vector<ConfigEval> configs;
    std::vector<double> test_auc_retrain;
    std::vector<double> test_auc_last_fold;
};

/// Trains on each fold's training subset (SMOTE first when configured) and
/// scores validation AUC. Single-class validation folds are skipped with a
/// flag; all folds skipped is an error.
ConfigEval cv_evaluate(const LearnerSpec& spec, const FoldPlan& plan, const Dataset& d,
                       const std::optional<SmoteConfig>& smote_cfg, int n_jobs = 1);

/// Index of the config with the best mean validation AUC; ties go to the
/// earliest sampled config.
std::size_t select_best(const std::vector<ConfigEval>& results);

enum class Strategy { kRetrain, kLastFold };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct FinalModelBundle {
    Strategy strategy = Strategy::kRetrain;
    LearnerSpec theta_star;
    TrainedModel model;
    std::vector<std::int64_t> training_ids;  // original records used (no synthetics)
    std::size_t training_set_size = 0;
};

/// RETRAIN fits on all in-time records; LAST FOLD fits on the last fold's
/// training subset only. SMOTE, when configured, applies to that training
/// set before fitting.
FinalModelBundle finalize(Strategy strategy, const LearnerSpec& theta_star, const FoldPlan& plan,
                          const Dataset& d_in_time, const std::optional<SmoteConfig>& smote_cfg,
                          int n_jobs = 1);

/// Out-of-time AUC of the bundled model; no refitting.
double evaluate_test(const FinalModelBundle& bundle, const Dataset& d_test);

struct OracleResult {
    double best_test_auc = 0.0;
    std::size_t config_id = 0;
};

/// Max test AUC across configs and the config achieving it. An upper-bound
/// diagnostic: conditioning on the best test score introduces selection bias.
OracleResult oracle_best(const std::vector<double>& test_aucs);

}  // namespace spcv
