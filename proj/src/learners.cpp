#include "spatialcv/learners.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "spatialcv/common.hpp"
#include "spatialcv/rng.hpp"

namespace spcv {

std::string to_string(LearnerKind k) {
    return k == LearnerKind::kRf ? "rf" : "gbm";
}

LearnerKind learner_kind_from_string(const std::string& s) {
    if (s == "rf") return LearnerKind::kRf;
    if (s == "gbm") return LearnerKind::kGbm;
    throw Error("unknown learner kind: " + s);
}

nlohmann::json LearnerSpec::to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind);
    j["seed"] = seed;
    if (kind == LearnerKind::kRf) {
        j["params"] = {{"n_trees", rf.n_trees},
                       {"max_depth", rf.max_depth},
                       {"min_samples_leaf", rf.min_samples_leaf},
                       {"mtry_fraction", rf.mtry_fraction},
                       {"bootstrap_fraction", rf.bootstrap_fraction}};
    } else {
        j["params"] = {{"n_trees", gbm.n_trees},
                       {"learning_rate", gbm.learning_rate},
                       {"max_depth", gbm.max_depth},
                       {"min_samples_leaf", gbm.min_samples_leaf},
                       {"subsample_fraction", gbm.subsample_fraction},
                       {"colsample_fraction", gbm.colsample_fraction},
                       {"l2_leaf_penalty", gbm.l2_leaf_penalty}};
    }
    return j;
}

LearnerSpec LearnerSpec::from_json(const nlohmann::json& j) {
    LearnerSpec s;
    s.kind = learner_kind_from_string(j.at("kind").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    const nlohmann::json& p = j.at("params");
    if (s.kind == LearnerKind::kRf) {
        s.rf.n_trees = p.at("n_trees").get<int>();
        s.rf.max_depth = p.at("max_depth").get<int>();
        s.rf.min_samples_leaf = p.at("min_samples_leaf").get<int>();
        s.rf.mtry_fraction = p.at("mtry_fraction").get<double>();
        s.rf.bootstrap_fraction = p.at("bootstrap_fraction").get<double>();
    } else {
        s.gbm.n_trees = p.at("n_trees").get<int>();
        s.gbm.learning_rate = p.at("learning_rate").get<double>();
        s.gbm.max_depth = p.at("max_depth").get<int>();
        s.gbm.min_samples_leaf = p.at("min_samples_leaf").get<int>();
        s.gbm.subsample_fraction = p.at("subsample_fraction").get<double>();
        s.gbm.colsample_fraction = p.at("colsample_fraction").get<double>();
        s.gbm.l2_leaf_penalty = p.at("l2_leaf_penalty").get<double>();
    }
    return s;
}

double Tree::predict(const std::vector<double>& row) const {
    int node = 0;
    while (feature[node] >= 0) {
        node = row[static_cast<std::size_t>(feature[node])] <= threshold[node] ? left[node]
                                                                               : right[node];
    }
    return value[node];
}

nlohmann::json Tree::to_json() const {
    return {{"feature", feature},
            {"threshold", threshold},
            {"left", left},
            {"right", right},
            {"value", value}};
}

Tree Tree::from_json(const nlohmann::json& j) {
    Tree t;
    t.feature = j.at("feature").get<std::vector<int>>();
    t.threshold = j.at("threshold").get<std::vector<double>>();
    t.left = j.at("left").get<std::vector<int>>();
    t.right = j.at("right").get<std::vector<int>>();
    t.value = j.at("value").get<std::vector<double>>();
    return t;
}

namespace {

double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

/// Column-major copy of the feature table; the split scan walks columns.
struct Columns {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<std::vector<double>> col;

    explicit Columns(const std::vector<std::vector<double>>& X) {
        n = X.size();
        p = n == 0 ? 0 : X[0].size();
        col.assign(p, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            require(X[i].size() == p, "fit: ragged feature table");
            for (std::size_t f = 0; f < p; ++f) col[f][i] = X[i][f];
        }
    }
};

enum class SplitCriterion { kGini, kSse };

/// Recursive exact-scan CART grower, shared by rf (gini on labels) and gbm
/// (sse on gradients, Newton leaf values). Thresholds are midpoints of
/// consecutive distinct values; ties in gain keep the first candidate, i.e.
/// the lowest feature index, then the lowest threshold.
class TreeGrower {
public:
    TreeGrower(const Columns& cols, const std::vector<double>& grad,
               const std::vector<double>* hess, SplitCriterion criterion, int max_depth,
               int min_leaf, double l2, double leaf_scale, std::size_t mtry, bool per_split_mtry,
               const std::vector<std::size_t>& fixed_features, Rng& rng)
        : cols_(cols),
          grad_(grad),
          hess_(hess),
          criterion_(criterion),
          max_depth_(max_depth),
          min_leaf_(min_leaf),
          l2_(l2),
          leaf_scale_(leaf_scale),
          mtry_(mtry),
          per_split_mtry_(per_split_mtry),
          fixed_features_(fixed_features),
          rng_(rng) {}

    Tree grow(std::vector<std::size_t> rows) {
        tree_ = Tree{};
        build(std::move(rows), 0);
        return std::move(tree_);
    }

private:
    struct Best {
        bool found = false;
        std::size_t feature = 0;
        double threshold = 0.0;
        double gain = 0.0;
    };

    int make_leaf(const std::vector<std::size_t>& rows) {
        double g = 0.0, h = 0.0;
        for (std::size_t i : rows) {
            g += grad_[i];
            if (hess_) h += (*hess_)[i];
        }
        double v;
        if (criterion_ == SplitCriterion::kGini) {
            v = g / static_cast<double>(rows.size());  // class-1 fraction
        } else {
            const double denom = h + l2_;
            v = denom > 0.0 ? leaf_scale_ * g / denom : 0.0;
        }
        tree_.feature.push_back(-1);
        tree_.threshold.push_back(0.0);
        tree_.left.push_back(-1);
        tree_.right.push_back(-1);
        tree_.value.push_back(v);
        return static_cast<int>(tree_.feature.size()) - 1;
    }

    Best scan_feature(const std::vector<std::size_t>& rows, std::size_t f) const {
        const std::vector<double>& x = cols_.col[f];
        std::vector<std::pair<double, std::size_t>> sorted;
        sorted.reserve(rows.size());
        for (std::size_t i : rows) sorted.emplace_back(x[i], i);
        std::sort(sorted.begin(), sorted.end());

        const auto n = static_cast<double>(rows.size());
        Best best;
        best.feature = f;

        if (criterion_ == SplitCriterion::kGini) {
            double total_pos = 0.0;
            for (std::size_t i : rows) total_pos += grad_[i];
            auto weighted_gini = [](double cnt, double pos) {
                if (cnt <= 0.0) return 0.0;
                const double pr = pos / cnt;
                return cnt * 2.0 * pr * (1.0 - pr);
            };
            const double parent = weighted_gini(n, total_pos);
            double left_n = 0.0, left_pos = 0.0;
            for (std::size_t t = 0; t + 1 < sorted.size(); ++t) {
                left_n += 1.0;
                left_pos += grad_[sorted[t].second];
                if (sorted[t].first == sorted[t + 1].first) continue;
                const double right_n = n - left_n;
                if (left_n < min_leaf_ || right_n < min_leaf_) continue;
                const double gain =
                    parent - weighted_gini(left_n, left_pos) -
                    weighted_gini(right_n, total_pos - left_pos);
                if (gain > best.gain) {
                    best.found = true;
                    best.gain = gain;
                    best.threshold = midpoint(sorted[t].first, sorted[t + 1].first);
                }
            }
        } else {
            double total_sum = 0.0;
            for (std::size_t i : rows) total_sum += grad_[i];
            const double parent_score = total_sum * total_sum / n;
            double left_n = 0.0, left_sum = 0.0;
            for (std::size_t t = 0; t + 1 < sorted.size(); ++t) {
                left_n += 1.0;
                left_sum += grad_[sorted[t].second];
                if (sorted[t].first == sorted[t + 1].first) continue;
                const double right_n = n - left_n;
                if (left_n < min_leaf_ || right_n < min_leaf_) continue;
                const double right_sum = total_sum - left_sum;
                const double gain = left_sum * left_sum / left_n +
                                    right_sum * right_sum / right_n - parent_score;
                if (gain > best.gain) {
                    best.found = true;
                    best.gain = gain;
                    best.threshold = midpoint(sorted[t].first, sorted[t + 1].first);
                }
            }
        }
        return best;
    }

    static double midpoint(double lo, double hi) {
        double m = 0.5 * (lo + hi);
        if (m >= hi) m = lo;  // keep "x <= threshold goes left" exact
        return m;
    }

    int build(std::vector<std::size_t> rows, int depth) {
        if (depth >= max_depth_ || rows.size() < 2 * static_cast<std::size_t>(min_leaf_) ||
            rows.size() < 2) {
            return make_leaf(rows);
        }

        std::vector<std::size_t> candidates;
        if (per_split_mtry_) {
            candidates = rng_.sample_without_replacement(cols_.p, mtry_);
            std::sort(candidates.begin(), candidates.end());
        } else {
            candidates = fixed_features_;
        }

        Best best;
        for (std::size_t f : candidates) {
            const Best b = scan_feature(rows, f);
            if (b.found && (!best.found || b.gain > best.gain)) best = b;
        }
        if (!best.found || best.gain <= 0.0) return make_leaf(rows);

        std::vector<std::size_t> left_rows, right_rows;
        left_rows.reserve(rows.size());
        right_rows.reserve(rows.size());
        const std::vector<double>& x = cols_.col[best.feature];
        for (std::size_t i : rows) {
            (x[i] <= best.threshold ? left_rows : right_rows).push_back(i);
        }
        rows.clear();
        rows.shrink_to_fit();

        const int node = static_cast<int>(tree_.feature.size());
        tree_.feature.push_back(static_cast<int>(best.feature));
        tree_.threshold.push_back(best.threshold);
        tree_.left.push_back(-1);
        tree_.right.push_back(-1);
        tree_.value.push_back(0.0);
        tree_.left[node] = build(std::move(left_rows), depth + 1);
        tree_.right[node] = build(std::move(right_rows), depth + 1);
        return node;
    }

    const Columns& cols_;
    const std::vector<double>& grad_;
    const std::vector<double>* hess_;
    SplitCriterion criterion_;
    int max_depth_;
    double min_leaf_;
    double l2_;
    double leaf_scale_;
    std::size_t mtry_;
    bool per_split_mtry_;
    const std::vector<std::size_t>& fixed_features_;
    Rng& rng_;
    Tree tree_;
};

Tree fit_rf_tree(const Columns& cols, const std::vector<double>& y01, const RfParams& p,
                 std::uint64_t tree_seed) {
    Rng rng(tree_seed);
    const std::size_t n = cols.n;
    const auto n_draw = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(p.bootstrap_fraction * static_cast<double>(n))));
    std::vector<std::size_t> rows(n_draw);
    for (std::size_t t = 0; t < n_draw; ++t) rows[t] = rng.below(n);
    std::sort(rows.begin(), rows.end());

    const auto mtry = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(p.mtry_fraction * static_cast<double>(cols.p))));
    static const std::vector<std::size_t> kNoFixed;
    TreeGrower grower(cols, y01, nullptr, SplitCriterion::kGini, p.max_depth, p.min_samples_leaf,
                      0.0, 1.0, mtry, /*per_split_mtry=*/true, kNoFixed, rng);
    return grower.grow(std::move(rows));
}

double logistic_loss(const std::vector<double>& margin, const std::vector<int>& y) {
    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double pr = sigmoid(margin[i]);
        pr = std::clamp(pr, 1e-15, 1.0 - 1e-15);
        loss += y[i] == 1 ? -std::log(pr) : -std::log(1.0 - pr);
    }
    return loss / static_cast<double>(y.size());
}

}  // namespace

TrainedModel fit(const LearnerSpec& spec, const std::vector<std::vector<double>>& X,
                 const std::vector<int>& y, const std::vector<std::int64_t>& row_ids, int n_jobs) {
    require(X.size() == y.size(), "fit: X/y length mismatch");
    require(X.size() >= 2, "fit: need at least 2 records");
    std::size_t n_pos = 0;
    for (int v : y) {
        require(v == 0 || v == 1, "fit: labels must be binary");
        if (v == 1) ++n_pos;
    }
    require(n_pos > 0 && n_pos < y.size(), "fit: single-class training labels");
    for (const auto& row : X) {
        for (double v : row) require(std::isfinite(v), "fit: non-finite feature value");
    }

    const Columns cols(X);
    const std::size_t n = cols.n;
    std::vector<Tree> trees;
    double base_score = 0.0;
    std::vector<double> loss_curve;

    if (spec.kind == LearnerKind::kRf) {
        require(spec.rf.n_trees >= 1, "fit: rf needs n_trees >= 1");
        std::vector<double> y01(n);
        for (std::size_t i = 0; i < n; ++i) y01[i] = static_cast<double>(y[i]);
        trees.resize(static_cast<std::size_t>(spec.rf.n_trees));

        int workers = n_jobs <= 0 ? static_cast<int>(std::thread::hardware_concurrency()) : n_jobs;
        workers = std::max(1, std::min<int>(workers, spec.rf.n_trees));
        if (workers == 1) {
            for (int t = 0; t < spec.rf.n_trees; ++t) {
                trees[static_cast<std::size_t>(t)] =
                    fit_rf_tree(cols, y01, spec.rf, mix_seed(spec.seed, static_cast<std::uint64_t>(t)));
            }
        } else {
            // Per-tree seeds make the result independent of thread scheduling.
            std::vector<std::thread> pool;
            std::atomic<int> next{0};
            for (int w = 0; w < workers; ++w) {
                pool.emplace_back([&]() {
                    while (true) {
                        const int t = next.fetch_add(1);
                        if (t >= spec.rf.n_trees) break;
                        trees[static_cast<std::size_t>(t)] = fit_rf_tree(
                            cols, y01, spec.rf, mix_seed(spec.seed, static_cast<std::uint64_t>(t)));
                    }
                });
            }
            for (auto& th : pool) th.join();
        }
    } else {
        require(spec.gbm.n_trees >= 0, "fit: gbm needs n_trees >= 0");
        require(spec.gbm.learning_rate > 0.0, "fit: learning_rate must be > 0");
        const double prior = static_cast<double>(n_pos) / static_cast<double>(n);
        base_score = std::log(prior / (1.0 - prior));

        std::vector<double> margin(n, base_score);
        std::vector<double> grad(n), hess(n);
        loss_curve.push_back(logistic_loss(margin, y));

        for (int m = 0; m < spec.gbm.n_trees; ++m) {
            Rng rng(mix_seed(spec.seed, 0x9b0000ull + static_cast<std::uint64_t>(m)));
            for (std::size_t i = 0; i < n; ++i) {
                double pr = sigmoid(margin[i]);
                grad[i] = static_cast<double>(y[i]) - pr;
                pr = std::clamp(pr, 1e-15, 1.0 - 1e-15);
                hess[i] = pr * (1.0 - pr);
            }

            const auto n_rows = std::max<std::size_t>(
                2, static_cast<std::size_t>(
                       std::llround(spec.gbm.subsample_fraction * static_cast<double>(n))));
            std::vector<std::size_t> rows;
            if (n_rows >= n) {
                rows.resize(n);
                for (std::size_t i = 0; i < n; ++i) rows[i] = i;
            } else {
                rows = rng.sample_without_replacement(n, n_rows);
                std::sort(rows.begin(), rows.end());
            }

            const auto n_cols = std::max<std::size_t>(
                1, static_cast<std::size_t>(
                       std::llround(spec.gbm.colsample_fraction * static_cast<double>(cols.p))));
            std::vector<std::size_t> feats = rng.sample_without_replacement(cols.p, n_cols);
            std::sort(feats.begin(), feats.end());

            TreeGrower grower(cols, grad, &hess, SplitCriterion::kSse, spec.gbm.max_depth,
                              spec.gbm.min_samples_leaf, spec.gbm.l2_leaf_penalty,
                              spec.gbm.learning_rate, 0, /*per_split_mtry=*/false, feats, rng);
            Tree tree = grower.grow(std::move(rows));

            for (std::size_t i = 0; i < n; ++i) margin[i] += tree.predict(X[i]);
            trees.push_back(std::move(tree));
            loss_curve.push_back(logistic_loss(margin, y));
        }
    }

    return TrainedModel(spec, std::move(trees), base_score, cols.p, row_ids,
                        std::move(loss_curve));
}

TrainedModel::TrainedModel(LearnerSpec spec, std::vector<Tree> trees, double base_score,
                           std::size_t feature_count, std::vector<std::int64_t> training_ids,
                           std::vector<double> gbm_train_loss)
    : spec_(spec),
      trees_(std::move(trees)),
      base_score_(base_score),
      feature_count_(feature_count),
      training_ids_(std::move(training_ids)),
      gbm_train_loss_(std::move(gbm_train_loss)) {}

double TrainedModel::predict_one(const std::vector<double>& row) const {
    require(row.size() == feature_count_, "predict: feature width mismatch");
    if (spec_.kind == LearnerKind::kRf) {
        double acc = 0.0;
        for (const Tree& t : trees_) acc += t.predict(row);
        return acc / static_cast<double>(trees_.size());
    }
    double margin = base_score_;
    for (const Tree& t : trees_) margin += t.predict(row);
    return sigmoid(margin);
}

std::vector<double> TrainedModel::predict_proba(const std::vector<std::vector<double>>& rows) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(predict_one(row));
    return out;
}

nlohmann::json TrainedModel::to_json() const {
    nlohmann::json j;
    j["format"] = "spatialcv-model";
    j["version"] = 1;
    j["spec"] = spec_.to_json();
    j["base_score"] = base_score_;
    j["feature_count"] = feature_count_;
    j["training_ids"] = training_ids_;
    nlohmann::json trees = nlohmann::json::array();
    for (const Tree& t : trees_) trees.push_back(t.to_json());
    j["trees"] = std::move(trees);
    return j;
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
    require(j.value("format", "") == std::string("spatialcv-model"),
            "model load: not a spatialcv model file");
    require(j.value("version", 0) == 1, "model load: unsupported version");
    std::vector<Tree> trees;
    for (const auto& t : j.at("trees")) trees.push_back(Tree::from_json(t));
    return TrainedModel(LearnerSpec::from_json(j.at("spec")), std::move(trees),
                        j.at("base_score").get<double>(), j.at("feature_count").get<std::size_t>(),
                        j.at("training_ids").get<std::vector<std::int64_t>>(), {});
}

void TrainedModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "model save: cannot open " + path);
    out << to_json().dump(2) << '\n';
}

TrainedModel TrainedModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "model load: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

}  // namespace spcv
