#include "spatialcv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spatialcv/common.hpp"

namespace spcv {

std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double roc_auc(const std::vector<int>& labels, const std::vector<double>& scores) {
    require(labels.size() == scores.size(), "roc_auc: labels/scores length mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) {
        require(y == 0 || y == 1, "roc_auc: labels must be binary");
        if (y == 1) ++n_pos;
        else ++n_neg;
    }
    require(n_pos > 0 && n_neg > 0, "roc_auc: both classes required");

    const std::vector<double> ranks = average_ranks(scores);
    double rank_sum_pos = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1) rank_sum_pos += ranks[i];
    }
    const double np = static_cast<double>(n_pos);
    const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(n_neg));
}

double mae(const ScoreSeries& series) {
    require(series.validation.size() == series.test.size(), "mae: length mismatch");
    require(!series.validation.empty(), "mae: empty series");
    double sum = 0.0;
    for (std::size_t i = 0; i < series.validation.size(); ++i) {
        sum += std::abs(series.test[i] - series.validation[i]);
    }
    return sum / static_cast<double>(series.validation.size());
}

namespace {

std::optional<double> pearson_raw(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

std::optional<double> pearson(const ScoreSeries& series) {
    require(series.validation.size() == series.test.size(), "pearson: length mismatch");
    require(series.validation.size() >= 2, "pearson: need at least 2 pairs");
    return pearson_raw(series.validation, series.test);
}

std::optional<double> spearman(const ScoreSeries& series) {
    require(series.validation.size() == series.test.size(), "spearman: length mismatch");
    require(series.validation.size() >= 2, "spearman: need at least 2 pairs");
    return pearson_raw(average_ranks(series.validation), average_ranks(series.test));
}

RobustnessReport robustness_report(const ScoreSeries& series) {
    require(series.validation.size() == series.test.size(), "robustness_report: length mismatch");
    require(series.validation.size() >= 2, "robustness_report: need m >= 2 scored configs");
    RobustnessReport r;
    r.m = series.validation.size();
    r.mae = mae(series);
    r.pearson = pearson(series);
    r.spearman = spearman(series);
    const auto it = std::max_element(series.test.begin(), series.test.end());
    r.oracle_test_auc = *it;
    r.oracle_config_id = static_cast<std::size_t>(it - series.test.begin());
    return r;
}

}  // namespace spcv
