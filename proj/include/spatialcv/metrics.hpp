#pragma once

#include <optional>
#include <vector>

#include "spatialcv/common.hpp"

namespace spcv {

/// ROC AUC via the rank-sum (Mann-Whitney) formulation; tied pairs count 0.5.
/// Throws when a class is absent or lengths differ.
double roc_auc(const std::vector<int>& labels, const std::vector<double>& scores);

/// Average ranks (1-based), ties get the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& values);

/// Paired validation-phase and test-phase scores for m configurations.
struct ScoreSeries {
    std::vector<double> validation;  // s-hat
    std::vector<double> test;        // s
};

double mae(const ScoreSeries& series);

/// Undefined (constant input) correlations are reported as missing, never 0.
std::optional<double> pearson(const ScoreSeries& series);
std::optional<double> spearman(const ScoreSeries& series);

struct RobustnessReport {
    std::size_t m = 0;
    double mae = 0.0;
    std::optional<double> pearson;
    std::optional<double> spearman;
    double oracle_test_auc = 0.0;
    std::size_t oracle_config_id = 0;
};

/// Pairs per-config validation and test scores; m >= 2 required.
RobustnessReport robustness_report(const ScoreSeries& series);

}  // namespace spcv
