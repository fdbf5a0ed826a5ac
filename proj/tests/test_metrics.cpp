#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "spatialcv/metrics.hpp"
#include "spatialcv/rng.hpp"

using namespace spcv;

TEST_CASE("roc_auc worked example") {
    // 4 pos-neg pairs, 3 correctly ordered.
    const std::vector<int> y = {0, 0, 1, 1};
    const std::vector<double> s = {0.1, 0.4, 0.35, 0.8};
    CHECK(roc_auc(y, s) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(oracle::auc_pair_enumeration(y, s) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("roc_auc tie and separation conventions") {
    const std::vector<int> y = {0, 1, 0, 1};
    CHECK(roc_auc(y, {0.3, 0.3, 0.3, 0.3}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(roc_auc(y, {0.0, 1.0, 0.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("roc_auc errors") {
    CHECK_THROWS_AS(roc_auc({1, 1}, {0.1, 0.2}), Error);
    CHECK_THROWS_AS(roc_auc({0, 1}, {0.1}), Error);
}

TEST_CASE("rank-sum AUC equals pair enumeration on random tied instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t n = 4 + rng.below(47);
        std::vector<int> y(n);
        std::vector<double> s(n);
        bool has0 = false, has1 = false;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = static_cast<int>(rng.below(2));
            // Coarse grid of score values forces plenty of ties.
            s[i] = static_cast<double>(rng.below(8)) / 7.0;
            (y[i] ? has1 : has0) = true;
        }
        if (!has0 || !has1) {
            y[0] = 0;
            y[n - 1] = 1;
        }
        const double fast = roc_auc(y, s);
        const double slow = oracle::auc_pair_enumeration(y, s);
        CHECK(std::abs(fast - slow) <= 1e-12);
    }
}

TEST_CASE("roc_auc symmetry and monotone-transform invariance") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 6 + rng.below(20);
        std::vector<int> y(n);
        std::vector<double> s(n), neg(n), warped(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = static_cast<int>(rng.below(2));
            s[i] = rng.uniform();  // continuous, ties have probability zero
            neg[i] = -s[i];
            warped[i] = std::exp(3.0 * s[i]) + 1.0;  // strictly increasing
        }
        y[0] = 0;
        y[1] = 1;
        CHECK(roc_auc(y, s) + roc_auc(y, neg) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(roc_auc(y, s) == doctest::Approx(roc_auc(y, warped)).epsilon(1e-12));
    }
}

TEST_CASE("mae worked examples") {
    CHECK(mae({{0.5, 0.6}, {0.5, 0.6}}) == 0.0);
    CHECK(mae({{0.8, 0.6}, {0.7, 0.7}}) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("pearson worked examples") {
    CHECK(*pearson({{1, 2, 3}, {1, 2, 3}}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*pearson({{1, 2, 3}, {2, 1, 0}}) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(*pearson({{1, 2, 3}, {3, 1, 2}}) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK_FALSE(pearson({{1, 1, 1}, {1, 2, 3}}).has_value());
}

TEST_CASE("spearman worked examples") {
    CHECK(*spearman({{1, 2, 3}, {4, 9, 11}}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*spearman({{1, 2, 3}, {9, 5, 1}}) == doctest::Approx(-1.0).epsilon(1e-12));
    // d = (-2, 1, 1), sum d^2 = 6, 1 - 36/24 = -0.5.
    CHECK(*spearman({{1, 2, 3}, {3, 1, 2}}) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK_FALSE(spearman({{2, 2, 2}, {1, 2, 3}}).has_value());
}

TEST_CASE("spearman equals pearson on ranks, with and without ties") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 3 + rng.below(30);
        ScoreSeries s;
        const bool with_ties = trial % 2 == 0;
        for (std::size_t i = 0; i < m; ++i) {
            if (with_ties) {
                s.validation.push_back(static_cast<double>(rng.below(5)));
                s.test.push_back(static_cast<double>(rng.below(5)));
            } else {
                s.validation.push_back(rng.uniform());
                s.test.push_back(rng.uniform());
            }
        }
        const auto sp = spearman(s);
        const auto pr = pearson({average_ranks(s.validation), average_ranks(s.test)});
        CHECK(sp.has_value() == pr.has_value());
        if (sp && pr) CHECK(std::abs(*sp - *pr) <= 1e-12);
        if (sp && !with_ties) {
            CHECK(*sp ==
                  doctest::Approx(oracle::spearman_d_formula(s.validation, s.test)).epsilon(1e-9));
        }
    }
}

TEST_CASE("mae is zero only for identical series") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        ScoreSeries s;
        for (int i = 0; i < 10; ++i) {
            s.validation.push_back(rng.uniform());
            s.test.push_back(rng.uniform());
        }
        const double v = mae(s);
        CHECK(v >= 0.0);
        if (v == 0.0) CHECK(s.validation == s.test);
    }
}

TEST_CASE("robustness_report on a constant shift") {
    ScoreSeries s;
    for (int i = 0; i < 6; ++i) {
        const double val = 0.6 + 0.03 * i;
        s.validation.push_back(val);
        s.test.push_back(val + 0.05);
    }
    const RobustnessReport r = robustness_report(s);
    CHECK(r.m == 6);
    CHECK(r.mae == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(*r.pearson == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*r.spearman == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.oracle_test_auc == doctest::Approx(0.6 + 0.15 + 0.05).epsilon(1e-12));
    CHECK(r.oracle_config_id == 5);
}

TEST_CASE("robustness_report degenerate and error cases") {
    const RobustnessReport r = robustness_report({{0.7, 0.7}, {0.7, 0.7}});
    CHECK(r.mae == 0.0);
    CHECK_FALSE(r.pearson.has_value());
    CHECK_FALSE(r.spearman.has_value());
    CHECK_THROWS_AS(robustness_report({{0.7}, {0.7}}), Error);
}
