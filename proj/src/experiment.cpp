#include "spatialcv/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "spatialcv/common.hpp"
#include "spatialcv/csv.hpp"
#include "spatialcv/metrics.hpp"
#include "spatialcv/rng.hpp"

namespace fs = std::filesystem;

namespace spcv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

YearRange parse_year_range(const nlohmann::json& j, const std::string& what) {
    require(j.is_array() && j.size() == 2, what + ": expected [first, last]");
    YearRange r{j[0].get<int>(), j[1].get<int>()};
    require(r.valid(), what + ": first year exceeds last");
    return r;
}

TemporalIntervals parse_intervals(const nlohmann::json& j) {
    TemporalIntervals out;
    for (const auto& item : j) out.push_back(parse_year_range(item, "interval"));
    return out;
}

Scheme scheme_from_string(const std::string& s) {
    if (s == "random") return Scheme::kRandom;
    if (s == "spatial") return Scheme::kSpatial;
    if (s == "environmental") return Scheme::kEnvironmental;
    if (s == "spatio_temporal") return Scheme::kSpatioTemporal;
    if (s == "tss") return Scheme::kTss;
    throw Error("unknown scheme type: " + s);
}

std::string na_or(double v) {
    return std::isnan(v) ? "NA" : fmt_double(v);
}

std::string na_or(const std::optional<double>& v) {
    return v ? fmt_double(*v) : "NA";
}

/// Linear-interpolation percentile of a sorted vector, p in [0, 100].
double percentile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return kNaN;
    if (sorted.size() == 1) return sorted[0];
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const auto workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), n));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("config: invalid JSON in " + path + ": " + e.what());
    }
    return from_json(j);
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.raw = j;

    if (j.contains("data")) {
        const auto& d = j.at("data");
        cfg.data_path = d.at("path").get<std::string>();
        const auto& s = d.at("schema");
        cfg.schema.lon_column = s.at("lon").get<std::string>();
        cfg.schema.lat_column = s.at("lat").get<std::string>();
        cfg.schema.year_column = s.at("year").get<std::string>();
        cfg.schema.label_column = s.at("label").get<std::string>();
        cfg.schema.feature_columns = s.at("features").get<std::vector<std::string>>();
    }
    if (j.contains("temporal_split")) {
        TemporalSplitSpec spec;
        spec.train_years = parse_year_range(j.at("temporal_split").at("train_years"), "train_years");
        spec.test_years = parse_year_range(j.at("temporal_split").at("test_years"), "test_years");
        cfg.split = spec;
    }
    if (j.contains("continuous_features")) {
        cfg.continuous_features = j.at("continuous_features").get<std::vector<std::string>>();
    }
    if (j.contains("schemes")) {
        for (const auto& sj : j.at("schemes")) {
            SchemeConfig sc;
            sc.name = sj.at("name").get<std::string>();
            sc.type = scheme_from_string(sj.at("type").get<std::string>());
            sc.seed = sj.value("seed", 0ull);
            switch (sc.type) {
                case Scheme::kRandom:
                case Scheme::kEnvironmental:
                    sc.k = sj.at("k").get<std::size_t>();
                    break;
                case Scheme::kSpatial:
                    sc.k = sj.at("k").get<std::size_t>();
                    sc.block_km = sj.at("block_km").get<double>();
                    break;
                case Scheme::kSpatioTemporal:
                    sc.k_spatial = sj.at("k_spatial").get<std::size_t>();
                    sc.block_km = sj.at("block_km").get<double>();
                    sc.intervals = parse_intervals(sj.at("intervals"));
                    break;
                case Scheme::kTss:
                    sc.intervals = parse_intervals(sj.at("intervals"));
                    break;
            }
            cfg.schemes.push_back(std::move(sc));
        }
    }
    if (j.contains("learners")) {
        for (const auto& lj : j.at("learners")) {
            LearnerConfig lc;
            lc.name = lj.at("name").get<std::string>();
            lc.kind = learner_kind_from_string(lj.at("kind").get<std::string>());
            lc.space = HyperparamSpace::defaults(lc.kind);
            if (lj.contains("space")) lc.space.apply_overrides(lj.at("space"));
            cfg.learners.push_back(std::move(lc));
        }
    }
    if (j.contains("search")) {
        cfg.n_configs = j.at("search").value("n_configs", 100);
        cfg.search_seed = j.at("search").value("seed", 0ull);
    }
    if (j.contains("smote") && !j.at("smote").is_null()) {
        SmoteConfig sm;
        sm.target_presence_ratio = j.at("smote").value("target_presence_ratio", 0.30);
        sm.k_neighbors = j.at("smote").value("k_neighbors", 5);
        sm.seed = j.at("smote").value("seed", 0ull);
        cfg.smote = sm;
    }
    if (j.contains("strategies")) {
        for (const auto& s : j.at("strategies")) {
            cfg.strategies.push_back(strategy_from_string(s.get<std::string>()));
        }
    }
    if (j.contains("thin")) {
        cfg.thin.min_dist_m = j.at("thin").value("min_dist_m", 500.0);
        cfg.thin.seed = j.at("thin").value("seed", 0ull);
    }
    if (j.contains("sac")) {
        const auto& sj = j.at("sac");
        cfg.sac.n_lags = sj.value("n_lags", 15);
        cfg.sac.max_lag_km = sj.value("max_lag_km", 0.0);
        cfg.sac.max_pairs = sj.value("max_pairs", 50000);
        cfg.sac.seed = sj.value("seed", 0ull);
        cfg.sac.model = variogram_model_from_string(sj.value("model", "exponential"));
    }
    if (j.contains("virtual_species")) {
        const auto& vj = j.at("virtual_species");
        VirtualSpeciesParams vp;
        vp.n_points = vj.at("n_points").get<std::size_t>();
        const auto& bbox = vj.at("bbox");
        require(bbox.is_array() && bbox.size() == 4,
                "virtual_species: bbox must be [lon_min, lat_min, lon_max, lat_max]");
        vp.lon_min = bbox[0].get<double>();
        vp.lat_min = bbox[1].get<double>();
        vp.lon_max = bbox[2].get<double>();
        vp.lat_max = bbox[3].get<double>();
        vp.range_km = vj.at("range_km").get<double>();
        vp.n_env_features = vj.at("n_env_features").get<std::size_t>();
        if (vj.contains("coefficients")) {
            vp.coefficients = vj.at("coefficients").get<std::vector<double>>();
        }
        vp.intercept = vj.value("intercept", 0.0);
        vp.noise_rate = vj.value("noise_rate", 0.0);
        const YearRange years = parse_year_range(vj.at("years"), "virtual_species years");
        vp.year_min = years.first;
        vp.year_max = years.last;
        vp.seed = vj.value("seed", 0ull);
        vp.spectral_modes = vj.value("spectral_modes", 2048);
        cfg.virtual_species = vp;
    }
    return cfg;
}

void ExperimentConfig::override_seeds(std::uint64_t g) {
    search_seed = mix_seed(g, 1);
    if (smote) smote->seed = mix_seed(g, 2);
    sac.seed = mix_seed(g, 3);
    thin.seed = mix_seed(g, 4);
    if (virtual_species) virtual_species->seed = mix_seed(g, 5);
    for (std::size_t i = 0; i < schemes.size(); ++i) schemes[i].seed = mix_seed(g, 100 + i);
}

FoldPlan build_plan(const SchemeConfig& sc, const Dataset& d) {
    switch (sc.type) {
        case Scheme::kRandom:
            return random_kfold(d, sc.k, sc.seed);
        case Scheme::kSpatial:
            return spatial_blocks_cv(d, sc.block_km, sc.k, sc.seed);
        case Scheme::kEnvironmental:
            return env_blocks_cv(d, sc.k, sc.seed);
        case Scheme::kSpatioTemporal:
            return spatiotemporal_cv(d, sc.block_km, sc.k_spatial, sc.intervals, sc.seed);
        case Scheme::kTss:
            return tss_cv(d, sc.intervals);
    }
    throw Error("build_plan: unreachable");
}

namespace {

struct SummaryRow {
    std::string scheme;
    std::string learner;
    std::size_t config_id = 0;
    double mean_val_auc = kNaN;
    double test_retrain = kNaN;
    double test_lastfold = kNaN;
};

/// Derived tables shared by run_experiment and emit_report. Order of
/// schemes/learners follows first appearance in the rows.
void write_derived_tables(const std::string& out_dir, const std::vector<SummaryRow>& rows) {
    std::vector<std::string> schemes, learners;
    for (const SummaryRow& r : rows) {
        if (std::find(schemes.begin(), schemes.end(), r.scheme) == schemes.end()) {
            schemes.push_back(r.scheme);
        }
        if (std::find(learners.begin(), learners.end(), r.learner) == learners.end()) {
            learners.push_back(r.learner);
        }
    }

    struct StratInfo {
        std::string name;
        double SummaryRow::*field;
    };
    std::vector<StratInfo> strategies;
    for (const SummaryRow& r : rows) {
        if (!std::isnan(r.test_retrain)) {
            strategies.push_back({"retrain", &SummaryRow::test_retrain});
            break;
        }
    }
    for (const SummaryRow& r : rows) {
        if (!std::isnan(r.test_lastfold)) {
            strategies.push_back({"last_fold", &SummaryRow::test_lastfold});
            break;
        }
    }

    // Per (scheme, learner): the config series, ordered by config id.
    auto series_for = [&](const std::string& scheme, const std::string& learner,
                          double SummaryRow::*field) {
        ScoreSeries s;
        for (const SummaryRow& r : rows) {
            if (r.scheme != scheme || r.learner != learner) continue;
            if (std::isnan(r.mean_val_auc) || std::isnan(r.*field)) continue;
            s.validation.push_back(r.mean_val_auc);
            s.test.push_back(r.*field);
        }
        return s;
    };

    // Robustness table.
    {
        std::ofstream out(out_dir + "/robustness.csv", std::ios::binary);
        require(out.good(), "cannot write robustness.csv");
        out << "scheme,strategy,learner,m,mae,pearson,spearman,oracle_test_auc\n";
        for (const auto& strat : strategies) {
            for (const std::string& scheme : schemes) {
                for (const std::string& learner : learners) {
                    const ScoreSeries s = series_for(scheme, learner, strat.field);
                    if (s.validation.size() < 2) continue;
                    const RobustnessReport rep = robustness_report(s);
                    out << scheme << ',' << strat.name << ',' << learner << ',' << rep.m << ','
                        << fmt_double(rep.mae) << ',' << na_or(rep.pearson) << ','
                        << na_or(rep.spearman) << ',' << fmt_double(rep.oracle_test_auc) << '\n';
                }
            }
        }
    }

    // Oracle table: strategy x scheme rows, one column per learner plus the
    // across-learner average.
    {
        std::ofstream out(out_dir + "/oracle_table.csv", std::ios::binary);
        require(out.good(), "cannot write oracle_table.csv");
        out << "strategy,scheme";
        for (const std::string& learner : learners) out << ',' << learner;
        out << ",average\n";
        for (const auto& strat : strategies) {
            for (const std::string& scheme : schemes) {
                out << strat.name << ',' << scheme;
                double sum = 0.0;
                std::size_t n = 0;
                std::string cells;
                for (const std::string& learner : learners) {
                    const ScoreSeries s = series_for(scheme, learner, strat.field);
                    if (s.test.empty()) {
                        cells += ",NA";
                        continue;
                    }
                    const OracleResult orc = oracle_best(s.test);
                    cells += ',' + fmt_double(orc.best_test_auc);
                    sum += orc.best_test_auc;
                    ++n;
                }
                out << cells << ',' << (n ? fmt_double(sum / static_cast<double>(n)) : "NA")
                    << '\n';
            }
        }
    }

    // Scatter data for validation-vs-test diagonal plots.
    {
        std::ofstream out(out_dir + "/scatter.csv", std::ios::binary);
        require(out.good(), "cannot write scatter.csv");
        out << "scheme,strategy,learner,config_id,val_auc,test_auc\n";
        for (const auto& strat : strategies) {
            for (const SummaryRow& r : rows) {
                if (std::isnan(r.mean_val_auc) || std::isnan(r.*(strat.field))) continue;
                out << r.scheme << ',' << strat.name << ',' << r.learner << ',' << r.config_id
                    << ',' << fmt_double(r.mean_val_auc) << ',' << fmt_double(r.*(strat.field))
                    << '\n';
            }
        }
    }

    // Figure-style summary: mean Pearson and mean MAE with across-learner IQR.
    {
        std::ofstream out(out_dir + "/fig2_summary.csv", std::ios::binary);
        require(out.good(), "cannot write fig2_summary.csv");
        out << "scheme,strategy,mean_pearson,mean_mae,mae_iqr_low,mae_iqr_high\n";
        for (const auto& strat : strategies) {
            for (const std::string& scheme : schemes) {
                std::vector<double> maes, pearsons;
                for (const std::string& learner : learners) {
                    const ScoreSeries s = series_for(scheme, learner, strat.field);
                    if (s.validation.size() < 2) continue;
                    maes.push_back(mae(s));
                    const auto pr = pearson(s);
                    if (pr) pearsons.push_back(*pr);
                }
                if (maes.empty()) continue;
                std::sort(maes.begin(), maes.end());
                const double mean_mae =
                    std::accumulate(maes.begin(), maes.end(), 0.0) / static_cast<double>(maes.size());
                double mean_pearson = kNaN;
                if (!pearsons.empty()) {
                    mean_pearson = std::accumulate(pearsons.begin(), pearsons.end(), 0.0) /
                                   static_cast<double>(pearsons.size());
                }
                out << scheme << ',' << strat.name << ',' << na_or(mean_pearson) << ','
                    << fmt_double(mean_mae) << ',' << fmt_double(percentile_sorted(maes, 25.0))
                    << ',' << fmt_double(percentile_sorted(maes, 75.0)) << '\n';
            }
        }
    }
}

std::string utc_now_string() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg_in, const RunOptions& opts) {
    ExperimentConfig cfg = cfg_in;
    if (opts.seed_override) cfg.override_seeds(*opts.seed_override);

    require(!cfg.data_path.empty(), "run: config lacks a data section");
    require(cfg.split.has_value(), "run: config lacks temporal_split");
    require(!cfg.schemes.empty(), "run: config lists no schemes");
    require(!cfg.learners.empty(), "run: config lists no learners");
    const bool want_retrain =
        std::find(cfg.strategies.begin(), cfg.strategies.end(), Strategy::kRetrain) !=
        cfg.strategies.end();
    const bool want_lastfold =
        std::find(cfg.strategies.begin(), cfg.strategies.end(), Strategy::kLastFold) !=
        cfg.strategies.end();
    require(!opts.evaluate_tests || want_retrain || want_lastfold,
            "run: config lists no strategies");

    fs::create_directories(opts.out_dir);
    fs::create_directories(opts.out_dir + "/folds");

    IngestSummary ingest;
    const Dataset full = load_csv(cfg.data_path, cfg.schema, &ingest);
    std::cerr << ingest.to_log_line() << '\n';
    const TemporalSplitResult split = temporal_split(full, *cfg.split);
    const Dataset& d_in = split.in_time;
    const Dataset& d_test = split.out_of_time;

    // Cell filters.
    std::vector<SchemeConfig> schemes;
    for (const SchemeConfig& sc : cfg.schemes) {
        if (opts.only_scheme.empty() || sc.name == opts.only_scheme) schemes.push_back(sc);
    }
    std::vector<LearnerConfig> learners;
    for (const LearnerConfig& lc : cfg.learners) {
        if (opts.only_learner.empty() || lc.name == opts.only_learner) learners.push_back(lc);
    }
    require(!schemes.empty(), "run: --only scheme filter matched nothing");
    require(!learners.empty(), "run: --only learner filter matched nothing");

    const std::size_t n_schemes = schemes.size();
    const std::size_t n_learners = learners.size();
    const std::size_t n_cfg = cfg.n_configs;

    // Fold plans.
    std::vector<std::optional<FoldPlan>> plans(n_schemes);
    std::vector<std::string> plan_errors(n_schemes);
    for (std::size_t si = 0; si < n_schemes; ++si) {
        try {
            plans[si] = build_plan(schemes[si], d_in);
            plans[si]->write_csv(opts.out_dir + "/folds/" + schemes[si].name + ".csv");
            plans[si]->write_json(opts.out_dir + "/folds/" + schemes[si].name + ".json");
        } catch (const std::exception& e) {
            plan_errors[si] = e.what();
        }
    }

    // Hyperparameter configs, sampled per learner and shared across schemes
    // so scheme comparisons see identical candidates.
    std::vector<std::vector<LearnerSpec>> specs(n_learners);
    std::vector<std::uint64_t> sample_seeds(n_learners);
    for (std::size_t li = 0; li < n_learners; ++li) {
        sample_seeds[li] = mix_seed(cfg.search_seed, 0x5a3c0ull + li);
        specs[li] = sample_configs(learners[li].space, n_cfg, sample_seeds[li]);
    }

    // Phase A: RETRAIN is scheme-independent, so fit and score once per
    // (learner, config).
    std::vector<double> retrain_auc(n_learners * n_cfg, kNaN);
    std::vector<std::string> retrain_error(n_learners * n_cfg);
    if (opts.evaluate_tests && want_retrain) {
        parallel_for(n_learners * n_cfg, opts.jobs, [&](std::size_t item) {
            const std::size_t li = item / n_cfg;
            const std::size_t ci = item % n_cfg;
            try {
                // RETRAIN ignores fold structure; any non-empty plan stands in.
                FoldPlan whole;
                whole.folds.resize(1);
                whole.folds[0].train_ids = d_in.ids();
                std::sort(whole.folds[0].train_ids.begin(), whole.folds[0].train_ids.end());
                whole.folds[0].val_ids = {whole.folds[0].train_ids.back()};
                whole.folds[0].train_ids.pop_back();
                const FinalModelBundle bundle =
                    finalize(Strategy::kRetrain, specs[li][ci], whole, d_in, cfg.smote, 1);
                retrain_auc[item] = evaluate_test(bundle, d_test);
            } catch (const std::exception& e) {
                retrain_error[item] = e.what();
            }
        });
    }

    // Phase B: per (scheme, learner, config): CV scores and the LAST FOLD
    // test score.
    struct ItemResult {
        bool ok = false;
        std::string error;
        ConfigEval eval;
        double lastfold_auc = kNaN;
    };
    std::vector<ItemResult> items(n_schemes * n_learners * n_cfg);
    auto item_index = [&](std::size_t si, std::size_t li, std::size_t ci) {
        return (si * n_learners + li) * n_cfg + ci;
    };
    parallel_for(items.size(), opts.jobs, [&](std::size_t idx) {
        const std::size_t si = idx / (n_learners * n_cfg);
        const std::size_t li = (idx / n_cfg) % n_learners;
        const std::size_t ci = idx % n_cfg;
        ItemResult& res = items[idx];
        if (!plans[si]) {
            res.error = plan_errors[si];
            return;
        }
        try {
            res.eval = cv_evaluate(specs[li][ci], *plans[si], d_in, cfg.smote, 1);
            res.eval.config_id = ci;
            if (opts.evaluate_tests && want_lastfold) {
                const FinalModelBundle bundle =
                    finalize(Strategy::kLastFold, specs[li][ci], *plans[si], d_in, cfg.smote, 1);
                res.lastfold_auc = evaluate_test(bundle, d_test);
            }
            res.ok = true;
        } catch (const std::exception& e) {
            res.error = e.what();
        }
    });

    // Cell statuses.
    RunResult run;
    run.out_dir = opts.out_dir;
    std::vector<std::vector<bool>> cell_ok(n_schemes, std::vector<bool>(n_learners, true));
    for (std::size_t si = 0; si < n_schemes; ++si) {
        for (std::size_t li = 0; li < n_learners; ++li) {
            CellStatus st;
            st.scheme = schemes[si].name;
            st.learner = learners[li].name;
            if (!plans[si]) {
                st.ok = false;
                st.error = "fold plan: " + plan_errors[si];
            }
            for (std::size_t ci = 0; ci < n_cfg && st.ok; ++ci) {
                const ItemResult& r = items[item_index(si, li, ci)];
                if (!r.ok) {
                    st.ok = false;
                    st.error = "config " + std::to_string(ci) + ": " + r.error;
                }
                const std::string& re = retrain_error[li * n_cfg + ci];
                if (opts.evaluate_tests && want_retrain && !re.empty()) {
                    st.ok = false;
                    st.error = "retrain config " + std::to_string(ci) + ": " + re;
                }
            }
            cell_ok[si][li] = st.ok;
            if (!st.ok) run.exit_code = 2;
            run.cells.push_back(std::move(st));
        }
    }

    // configs.csv: sampled hyperparameters per learner (shared across schemes).
    {
        std::ofstream out(opts.out_dir + "/configs.csv", std::ios::binary);
        require(out.good(), "cannot write configs.csv");
        out << "learner,config_id,params_json\n";
        for (std::size_t li = 0; li < n_learners; ++li) {
            for (std::size_t ci = 0; ci < n_cfg; ++ci) {
                out << learners[li].name << ',' << ci << ','
                    << csv::escape(specs[li][ci].to_json().dump()) << '\n';
            }
        }
    }

    // search_results.csv: one row per (scheme, learner, config, fold).
    {
        std::ofstream out(opts.out_dir + "/search_results.csv", std::ios::binary);
        require(out.good(), "cannot write search_results.csv");
        out << "scheme,learner,config_id,fold,val_auc,skipped\n";
        for (std::size_t si = 0; si < n_schemes; ++si) {
            for (std::size_t li = 0; li < n_learners; ++li) {
                for (std::size_t ci = 0; ci < n_cfg; ++ci) {
                    const ItemResult& r = items[item_index(si, li, ci)];
                    if (!r.ok) continue;
                    for (std::size_t j = 0; j < r.eval.folds.size(); ++j) {
                        const FoldScore& f = r.eval.folds[j];
                        out << schemes[si].name << ',' << learners[li].name << ',' << ci << ','
                            << j << ',' << (f.skipped ? "NA" : fmt_double(f.auc)) << ','
                            << (f.skipped ? 1 : 0) << '\n';
                    }
                }
            }
        }
    }

    // summary.csv + in-memory rows for the derived tables.
    std::vector<SummaryRow> rows;
    {
        std::ofstream out(opts.out_dir + "/summary.csv", std::ios::binary);
        require(out.good(), "cannot write summary.csv");
        out << "scheme,learner,config_id,mean_val_auc,test_auc_retrain,test_auc_lastfold\n";
        for (std::size_t si = 0; si < n_schemes; ++si) {
            for (std::size_t li = 0; li < n_learners; ++li) {
                for (std::size_t ci = 0; ci < n_cfg; ++ci) {
                    const ItemResult& r = items[item_index(si, li, ci)];
                    SummaryRow row;
                    row.scheme = schemes[si].name;
                    row.learner = learners[li].name;
                    row.config_id = ci;
                    if (r.ok) row.mean_val_auc = r.eval.mean_val_auc;
                    if (opts.evaluate_tests && want_retrain) {
                        row.test_retrain = retrain_auc[li * n_cfg + ci];
                    }
                    if (opts.evaluate_tests && want_lastfold) row.test_lastfold = r.lastfold_auc;
                    out << row.scheme << ',' << row.learner << ',' << ci << ','
                        << na_or(row.mean_val_auc) << ',' << na_or(row.test_retrain) << ','
                        << na_or(row.test_lastfold) << '\n';
                    if (cell_ok[si][li]) rows.push_back(std::move(row));
                }
            }
        }
    }

    // selected.csv: the config a practitioner would deploy per cell.
    {
        std::ofstream out(opts.out_dir + "/selected.csv", std::ios::binary);
        require(out.good(), "cannot write selected.csv");
        out << "scheme,learner,config_id,mean_val_auc,test_auc_retrain,test_auc_lastfold,params_json\n";
        for (std::size_t si = 0; si < n_schemes; ++si) {
            for (std::size_t li = 0; li < n_learners; ++li) {
                if (!cell_ok[si][li]) continue;
                std::vector<ConfigEval> evals;
                for (std::size_t ci = 0; ci < n_cfg; ++ci) {
                    evals.push_back(items[item_index(si, li, ci)].eval);
                }
                const std::size_t best = select_best(evals);
                const ItemResult& r = items[item_index(si, li, best)];
                const double retr = opts.evaluate_tests && want_retrain
                                        ? retrain_auc[li * n_cfg + best]
                                        : kNaN;
                out << schemes[si].name << ',' << learners[li].name << ',' << best << ','
                    << fmt_double(r.eval.mean_val_auc) << ',' << na_or(retr) << ','
                    << na_or(r.lastfold_auc) << ','
                    << csv::escape(specs[li][best].to_json().dump()) << '\n';
            }
        }
    }

    if (opts.evaluate_tests) write_derived_tables(opts.out_dir, rows);

    // Manifest: the only file carrying timestamps.
    {
        nlohmann::json m;
        m["tool"] = "spatialcv";
        m["version"] = kVersion;
        m["created_utc"] = utc_now_string();
        {
            std::ostringstream hex;
            hex << std::hex << fnv1a64(cfg.raw.dump());
            m["config_hash"] = hex.str();
        }
        m["jobs"] = opts.jobs;
        if (opts.seed_override) m["seed_override"] = *opts.seed_override;
        m["config"] = cfg.raw;
        m["ingest"] = {{"rows_read", ingest.rows_read},
                       {"rows_kept", ingest.rows_kept},
                       {"rows_dropped", ingest.rows_dropped}};
        m["split"] = {{"in_time", d_in.size()},
                      {"out_of_time", d_test.size()},
                      {"dropped", split.dropped}};
        nlohmann::json seeds;
        seeds["search_seed"] = cfg.search_seed;
        for (std::size_t li = 0; li < n_learners; ++li) {
            seeds["sample_seed_" + learners[li].name] = sample_seeds[li];
        }
        for (const SchemeConfig& sc : schemes) seeds["scheme_seed_" + sc.name] = sc.seed;
        if (cfg.smote) seeds["smote_seed"] = cfg.smote->seed;
        m["seeds"] = seeds;
        nlohmann::json cells = nlohmann::json::array();
        for (const CellStatus& st : run.cells) {
            nlohmann::json c = {{"scheme", st.scheme},
                                {"learner", st.learner},
                                {"status", st.ok ? "ok" : "failed"}};
            if (!st.ok) c["error"] = st.error;
            cells.push_back(std::move(c));
        }
        m["cells"] = std::move(cells);
        std::ofstream out(opts.out_dir + "/manifest.json", std::ios::binary);
        require(out.good(), "cannot write manifest.json");
        out << m.dump(2) << '\n';
    }

    return run;
}

void emit_report(const std::string& bundle_dir) {
    const csv::Table table = csv::read_file(bundle_dir + "/summary.csv");
    const int c_scheme = table.column("scheme");
    const int c_learner = table.column("learner");
    const int c_cfg = table.column("config_id");
    const int c_val = table.column("mean_val_auc");
    const int c_retr = table.column("test_auc_retrain");
    const int c_last = table.column("test_auc_lastfold");
    require(c_scheme >= 0 && c_learner >= 0 && c_cfg >= 0 && c_val >= 0 && c_retr >= 0 &&
                c_last >= 0,
            "emit_report: summary.csv lacks expected columns");

    auto cell_value = [](const std::string& s) {
        if (csv::is_missing(s)) return kNaN;
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        require(res.ec == std::errc(), "emit_report: unparseable number '" + s + "'");
        return v;
    };
    std::vector<SummaryRow> rows;
    for (const auto& r : table.rows) {
        SummaryRow row;
        row.scheme = r[static_cast<std::size_t>(c_scheme)];
        row.learner = r[static_cast<std::size_t>(c_learner)];
        row.config_id = static_cast<std::size_t>(std::stoull(r[static_cast<std::size_t>(c_cfg)]));
        row.mean_val_auc = cell_value(r[static_cast<std::size_t>(c_val)]);
        row.test_retrain = cell_value(r[static_cast<std::size_t>(c_retr)]);
        row.test_lastfold = cell_value(r[static_cast<std::size_t>(c_last)]);
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), "emit_report: summary.csv has no rows");
    write_derived_tables(bundle_dir, rows);
}

}  // namespace spcv
