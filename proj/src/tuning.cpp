#include "spatialcv/tuning.hpp"

#include <algorithm>
#include <cmath>

#include "spatialcv/common.hpp"
#include "spatialcv/metrics.hpp"
#include "spatialcv/rng.hpp"

namespace spcv {

HyperparamSpace HyperparamSpace::defaults(LearnerKind kind) {
    using K = ParamRange::Kind;
    HyperparamSpace s;
    s.kind = kind;
    if (kind == LearnerKind::kRf) {
        s.ranges = {{"n_trees", {K::kInt, 100, 1000}},
                    {"max_depth", {K::kInt, 2, 20}},
                    {"min_samples_leaf", {K::kInt, 1, 20}},
                    {"mtry_fraction", {K::kReal, 0.2, 1.0}},
                    {"bootstrap_fraction", {K::kReal, 0.5, 1.0}}};
    } else {
        s.ranges = {{"n_trees", {K::kInt, 50, 1000}},
                    {"learning_rate", {K::kLogReal, 0.005, 0.3}},
                    {"max_depth", {K::kInt, 1, 8}},
                    {"min_samples_leaf", {K::kInt, 1, 20}},
                    {"subsample_fraction", {K::kReal, 0.5, 1.0}},
                    {"colsample_fraction", {K::kReal, 0.3, 1.0}},
                    {"l2_leaf_penalty", {K::kReal, 0.0, 10.0}}};
    }
    return s;
}

void HyperparamSpace::apply_overrides(const nlohmann::json& overrides) {
    for (auto it = overrides.begin(); it != overrides.end(); ++it) {
        require(ranges.count(it.key()) == 1,
                "hyperparameter space: unknown parameter '" + it.key() + "'");
        const nlohmann::json& r = it.value();
        ParamRange pr = ranges[it.key()];
        if (r.contains("kind")) {
            const std::string k = r.at("kind").get<std::string>();
            if (k == "int") pr.kind = ParamRange::Kind::kInt;
            else if (k == "real") pr.kind = ParamRange::Kind::kReal;
            else if (k == "log_real") pr.kind = ParamRange::Kind::kLogReal;
            else throw Error("hyperparameter space: unknown range kind '" + k + "'");
        }
        if (r.contains("lo")) pr.lo = r.at("lo").get<double>();
        if (r.contains("hi")) pr.hi = r.at("hi").get<double>();
        require(pr.lo <= pr.hi, "hyperparameter space: lo > hi for '" + it.key() + "'");
        ranges[it.key()] = pr;
    }
}

nlohmann::json HyperparamSpace::to_json() const {
    nlohmann::json j;
    for (const auto& [name, r] : ranges) {
        const char* kind = r.kind == ParamRange::Kind::kInt
                               ? "int"
                               : (r.kind == ParamRange::Kind::kLogReal ? "log_real" : "real");
        j[name] = {{"kind", kind}, {"lo", r.lo}, {"hi", r.hi}};
    }
    return j;
}

namespace {

double draw(const ParamRange& r, Rng& rng) {
    switch (r.kind) {
        case ParamRange::Kind::kInt:
            return static_cast<double>(
                rng.uniform_int(static_cast<long long>(r.lo), static_cast<long long>(r.hi)));
        case ParamRange::Kind::kLogReal:
            return r.lo == r.hi ? r.lo : rng.log_uniform(r.lo, r.hi);
        case ParamRange::Kind::kReal:
        default:
            return rng.uniform(r.lo, r.hi);
    }
}

}  // namespace

void set_learner_param(LearnerSpec& spec, const std::string& name, double v) {
    auto as_int = [&](int& field) { field = static_cast<int>(std::llround(v)); };
    if (spec.kind == LearnerKind::kRf) {
        if (name == "n_trees") as_int(spec.rf.n_trees);
        else if (name == "max_depth") as_int(spec.rf.max_depth);
        else if (name == "min_samples_leaf") as_int(spec.rf.min_samples_leaf);
        else if (name == "mtry_fraction") spec.rf.mtry_fraction = v;
        else if (name == "bootstrap_fraction") spec.rf.bootstrap_fraction = v;
        else throw Error("unknown rf parameter '" + name + "'");
    } else {
        if (name == "n_trees") as_int(spec.gbm.n_trees);
        else if (name == "learning_rate") spec.gbm.learning_rate = v;
        else if (name == "max_depth") as_int(spec.gbm.max_depth);
        else if (name == "min_samples_leaf") as_int(spec.gbm.min_samples_leaf);
        else if (name == "subsample_fraction") spec.gbm.subsample_fraction = v;
        else if (name == "colsample_fraction") spec.gbm.colsample_fraction = v;
        else if (name == "l2_leaf_penalty") spec.gbm.l2_leaf_penalty = v;
        else throw Error("unknown gbm parameter '" + name + "'");
    }
}

std::vector<LearnerSpec> sample_configs(const HyperparamSpace& space, std::size_t n,
                                        std::uint64_t seed) {
    require(n >= 1, "sample_configs: n must be >= 1");
    require(!space.ranges.empty(), "sample_configs: empty space");
    std::vector<LearnerSpec> out;
    out.reserve(n);
    Rng rng(mix_seed(seed, 0xc0f195ull));
    for (std::size_t i = 0; i < n; ++i) {
        LearnerSpec spec;
        spec.kind = space.kind;
        for (const auto& [name, range] : space.ranges) {
            set_learner_param(spec, name, draw(range, rng));
        }
        spec.seed = mix_seed(seed, 0xfe00ull + i);
        out.push_back(spec);
    }
    return out;
}

namespace {

/// Training table for a fold, SMOTE-augmented when configured. The id audit
/// rechecks that no validation id leaks into the training rows.
TrainTable fold_train_table(const Dataset& d, const Fold& fold,
                            const std::optional<SmoteConfig>& smote_cfg, std::uint64_t seed_tag) {
    TrainTable table;
    if (smote_cfg) {
        SmoteConfig cfg = *smote_cfg;
        cfg.seed = mix_seed(cfg.seed, seed_tag);
        table = smote(d, fold.train_ids, cfg);
    } else {
        table = materialize_train(d, fold.train_ids);
    }
    for (std::int64_t id : table.source_ids) {
        if (id == TrainTable::kSyntheticId) continue;
        require(std::binary_search(fold.train_ids.begin(), fold.train_ids.end(), id),
                "fold training table: row id " + std::to_string(id) + " is not a training id");
        require(!std::binary_search(fold.val_ids.begin(), fold.val_ids.end(), id),
                "fold training table: validation id " + std::to_string(id) + " leaked into training");
    }
    return table;
}

double score_fold(const LearnerSpec& spec, const Dataset& d, const Fold& fold,
                  const std::optional<SmoteConfig>& smote_cfg, std::uint64_t seed_tag,
                  int n_jobs) {
    const TrainTable table = fold_train_table(d, fold, smote_cfg, seed_tag);
    const TrainedModel model = fit(spec, table.features, table.labels, table.source_ids, n_jobs);

    std::vector<std::vector<double>> val_x;
    std::vector<int> val_y;
    val_x.reserve(fold.val_ids.size());
    for (std::int64_t id : fold.val_ids) {
        const Record& r = d.record(d.index_of(id));
        val_x.push_back(r.features);
        val_y.push_back(r.label);
    }
    return roc_auc(val_y, model.predict_proba(val_x));
}

}  // namespace

ConfigEval cv_evaluate(const LearnerSpec& spec, const FoldPlan& plan, const Dataset& d,
                       const std::optional<SmoteConfig>& smote_cfg, int n_jobs) {
    require(!plan.folds.empty(), "cv_evaluate: empty fold plan");
    ConfigEval eval;
    eval.spec = spec;
    eval.folds.resize(plan.folds.size());

    double sum = 0.0;
    std::size_t scored = 0;
    for (std::size_t j = 0; j < plan.folds.size(); ++j) {
        const Fold& fold = plan.folds[j];
        if (fold.val_single_class) {
            eval.folds[j].skipped = true;
            ++eval.n_skipped;
            continue;
        }
        eval.folds[j].auc = score_fold(spec, d, fold, smote_cfg, j, n_jobs);
        sum += eval.folds[j].auc;
        ++scored;
    }
    require(scored > 0, "cv_evaluate: all folds skipped (single-class validation sets)");
    eval.mean_val_auc = sum / static_cast<double>(scored);
    return eval;
}

std::size_t select_best(const std::vector<ConfigEval>& results) {
    require(!results.empty(), "select_best: no configs");
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i) {
        if (results[i].mean_val_auc > results[best].mean_val_auc) best = i;
    }
    return best;
}

std::string to_string(Strategy s) {
    return s == Strategy::kRetrain ? "retrain" : "last_fold";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "retrain") return Strategy::kRetrain;
    if (s == "last_fold") return Strategy::kLastFold;
    throw Error("unknown strategy: " + s);
}

FinalModelBundle finalize(Strategy strategy, const LearnerSpec& theta_star, const FoldPlan& plan,
                          const Dataset& d_in_time, const std::optional<SmoteConfig>& smote_cfg,
                          int n_jobs) {
    require(!plan.folds.empty(), "finalize: empty fold plan");

    FinalModelBundle bundle;
    bundle.strategy = strategy;
    bundle.theta_star = theta_star;
    if (strategy == Strategy::kRetrain) {
        bundle.training_ids = d_in_time.ids();
        std::sort(bundle.training_ids.begin(), bundle.training_ids.end());
    } else {
        bundle.training_ids = plan.last_fold().train_ids;
    }
    bundle.training_set_size = bundle.training_ids.size();

    TrainTable table;
    if (smote_cfg) {
        SmoteConfig cfg = *smote_cfg;
        cfg.seed = mix_seed(cfg.seed, strategy == Strategy::kRetrain ? 0xf17a11ull : 0xf17a22ull);
        table = smote(d_in_time, bundle.training_ids, cfg);
    } else {
        table = materialize_train(d_in_time, bundle.training_ids);
    }
    try {
        bundle.model = fit(theta_star, table.features, table.labels, table.source_ids, n_jobs);
    } catch (const Error& e) {
        throw Error(std::string("finalize(") + to_string(strategy) + "): " + e.what());
    }
    return bundle;
}

double evaluate_test(const FinalModelBundle& bundle, const Dataset& d_test) {
    require(!d_test.empty(), "evaluate_test: empty test set");
    const ClassCounts cc = class_counts(d_test);
    require(cc.n_presence > 0 && cc.n_absence > 0, "evaluate_test: single-class test set");

    std::vector<std::vector<double>> x;
    std::vector<int> y;
    x.reserve(d_test.size());
    for (const Record& r : d_test.records()) {
        x.push_back(r.features);
        y.push_back(r.label);
    }
    return roc_auc(y, bundle.model.predict_proba(x));
}

OracleResult oracle_best(const std::vector<double>& test_aucs) {
    require(!test_aucs.empty(), "oracle_best: no test scores");
    OracleResult r;
    r.best_test_auc = test_aucs[0];
    r.config_id = 0;
    for (std::size_t i = 1; i < test_aucs.size(); ++i) {
        if (test_aucs[i] > r.best_test_auc) {
            r.best_test_auc = test_aucs[i];
            r.config_id = i;
        }
    }
    return r;
}

}  // namespace spcv
