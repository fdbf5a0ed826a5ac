#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace spcv {

enum class LearnerKind { kRf, kGbm };

std::string to_string(LearnerKind k);
LearnerKind learner_kind_from_string(const std::string& s);

struct RfParams {
    int n_trees = 300;
    int max_depth = 12;
    int min_samples_leaf = 1;
    double mtry_fraction = 0.7;       // feature fraction per split
    double bootstrap_fraction = 1.0;  // row fraction, drawn with replacement
};

struct GbmParams {
    int n_trees = 200;
    double learning_rate = 0.1;
    int max_depth = 3;
    int min_samples_leaf = 1;
    double subsample_fraction = 1.0;   // row fraction per stage, no replacement
    double colsample_fraction = 1.0;   // feature fraction per stage
    double l2_leaf_penalty = 0.0;
};

struct LearnerSpec {
    LearnerKind kind = LearnerKind::kGbm;
    RfParams rf;
    GbmParams gbm;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static LearnerSpec from_json(const nlohmann::json& j);
};

/// Binary tree stored as parallel arrays; feature < 0 marks a leaf.
struct Tree {
    std::vector<int> feature;
    std::vector<double> threshold;
    std::vector<int> left;
    std::vector<int> right;
    std::vector<double> value;

    double predict(const std::vector<double>& row) const;
    nlohmann::json to_json() const;
    static Tree from_json(const nlohmann::json& j);
};

/// Immutable fitted ensemble. rf: probability is the mean of per-tree leaf
/// class-1 fractions. gbm: probability is sigmoid(base + sum of leaf steps).
class TrainedModel {
public:
    TrainedModel() = default;
    TrainedModel(LearnerSpec spec, std::vector<Tree> trees, double base_score,
                 std::size_t feature_count, std::vector<std::int64_t> training_ids,
                 std::vector<double> gbm_train_loss);

    const LearnerSpec& spec() const { return spec_; }
    std::size_t feature_count() const { return feature_count_; }
    std::size_t n_trees() const { return trees_.size(); }
    const std::vector<std::int64_t>& training_ids() const { return training_ids_; }

    /// Training logistic loss after the base score and after each stage
    /// (gbm only; empty for rf). Not serialized.
    const std::vector<double>& gbm_train_loss() const { return gbm_train_loss_; }

    double predict_one(const std::vector<double>& row) const;
    std::vector<double> predict_proba(const std::vector<std::vector<double>>& rows) const;

    void save(const std::string& path) const;
    static TrainedModel load(const std::string& path);
    nlohmann::json to_json() const;
    static TrainedModel from_json(const nlohmann::json& j);

private:
    LearnerSpec spec_;
    std::vector<Tree> trees_;
    double base_score_ = 0.0;
    std::size_t feature_count_ = 0;
    std::vector<std::int64_t> training_ids_;
    std::vector<double> gbm_train_loss_;
};

/// Fits an ensemble. Rows must already be in canonical (id-sorted) order;
/// all sampling uses seeded draws over row indices, so the result does not
/// depend on worker count (n_jobs parallelizes rf trees only).
TrainedModel fit(const LearnerSpec& spec, const std::vector<std::vector<double>>& X,
                 const std::vector<int>& y, const std::vector<std::int64_t>& row_ids = {},
                 int n_jobs = 1);

}  // namespace spcv
