// Python bindings for the spatialcv core: datasets, thinning, variogram SAC
// estimation, the five splitters, SMOTE, the tree learners, tuning and the
// experiment runner.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "spatialcv/common.hpp"
#include "spatialcv/dataset.hpp"
#include "spatialcv/experiment.hpp"
#include "spatialcv/geo.hpp"
#include "spatialcv/metrics.hpp"
#include "spatialcv/simulate.hpp"
#include "spatialcv/smote.hpp"
#include "spatialcv/splitters.hpp"
#include "spatialcv/tuning.hpp"
#include "spatialcv/variogram.hpp"

namespace py = pybind11;
using namespace spcv;

namespace {

Dataset dataset_from_arrays(const std::vector<double>& lon, const std::vector<double>& lat,
                            const std::vector<int>& year, const std::vector<int>& label,
                            const std::vector<std::vector<double>>& features,
                            const std::vector<std::string>& feature_names,
                            const std::optional<std::vector<std::int64_t>>& ids) {
    const std::size_t n = lon.size();
    require(lat.size() == n && year.size() == n && label.size() == n && features.size() == n,
            "from_arrays: column lengths differ");
    std::vector<Record> recs(n);
    for (std::size_t i = 0; i < n; ++i) {
        recs[i].id = ids ? (*ids)[i] : static_cast<std::int64_t>(i);
        recs[i].lon = lon[i];
        recs[i].lat = lat[i];
        recs[i].year = year[i];
        recs[i].label = label[i];
        recs[i].features = features[i];
    }
    return Dataset(std::move(recs), feature_names);
}

LearnerSpec spec_from_args(const std::string& kind, std::uint64_t seed, const py::dict& params) {
    LearnerSpec spec;
    spec.kind = learner_kind_from_string(kind);
    spec.seed = seed;
    for (const auto& item : params) {
        set_learner_param(spec, py::cast<std::string>(item.first),
                          py::cast<double>(item.second));
    }
    return spec;
}

std::optional<SmoteConfig> smote_from_opt(const std::optional<py::dict>& d) {
    if (!d) return std::nullopt;
    SmoteConfig cfg;
    if (d->contains("target_presence_ratio")) {
        cfg.target_presence_ratio = py::cast<double>((*d)["target_presence_ratio"]);
    }
    if (d->contains("k_neighbors")) cfg.k_neighbors = py::cast<std::size_t>((*d)["k_neighbors"]);
    if (d->contains("seed")) cfg.seed = py::cast<std::uint64_t>((*d)["seed"]);
    return cfg;
}

py::dict train_table_dict(const TrainTable& t) {
    py::dict out;
    out["features"] = t.features;
    out["labels"] = t.labels;
    out["source_ids"] = t.source_ids;
    out["n_synthetic"] = t.n_synthetic;
    out["no_op"] = t.no_op;
    out["notice"] = t.notice;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "SAC-aware cross-validation toolkit for presence/absence geodata";
    m.attr("__version__") = kVersion;

    py::class_<Dataset>(m, "Dataset")
        .def_static("from_arrays", &dataset_from_arrays, py::arg("lon"), py::arg("lat"),
                    py::arg("year"), py::arg("label"), py::arg("features"),
                    py::arg("feature_names"), py::arg("ids") = std::nullopt)
        .def("__len__", &Dataset::size)
        .def_property_readonly("feature_names", &Dataset::feature_names)
        .def("ids", &Dataset::ids)
        .def("subset", &Dataset::subset, py::arg("ids"))
        .def("labels",
             [](const Dataset& d) {
                 std::vector<int> out;
                 for (const Record& r : d.records()) out.push_back(r.label);
                 return out;
             })
        .def("years",
             [](const Dataset& d) {
                 std::vector<int> out;
                 for (const Record& r : d.records()) out.push_back(r.year);
                 return out;
             })
        .def("coords",
             [](const Dataset& d) {
                 std::vector<std::pair<double, double>> out;
                 for (const Record& r : d.records()) out.emplace_back(r.lon, r.lat);
                 return out;
             })
        .def("features",
             [](const Dataset& d) {
                 std::vector<std::vector<double>> out;
                 for (const Record& r : d.records()) out.push_back(r.features);
                 return out;
             })
        .def("class_counts", [](const Dataset& d) {
            const ClassCounts c = class_counts(d);
            return py::make_tuple(c.n_presence, c.n_absence);
        });

    m.def(
        "load_csv",
        [](const std::string& path, const std::string& lon, const std::string& lat,
           const std::string& year, const std::string& label,
           const std::vector<std::string>& features) {
            CsvSchema schema{lon, lat, year, label, features};
            IngestSummary s;
            Dataset d = load_csv(path, schema, &s);
            py::dict summary;
            summary["rows_read"] = s.rows_read;
            summary["rows_kept"] = s.rows_kept;
            summary["rows_dropped"] = s.rows_dropped;
            summary["dropped_by_reason"] = s.dropped_by_reason;
            return py::make_tuple(std::move(d), summary);
        },
        py::arg("path"), py::arg("lon"), py::arg("lat"), py::arg("year"), py::arg("label"),
        py::arg("features"));

    m.def(
        "temporal_split",
        [](const Dataset& d, std::pair<int, int> train_years, std::pair<int, int> test_years) {
            TemporalSplitSpec spec;
            spec.train_years = {train_years.first, train_years.second};
            spec.test_years = {test_years.first, test_years.second};
            TemporalSplitResult r = temporal_split(d, spec);
            return py::make_tuple(std::move(r.in_time), std::move(r.out_of_time), r.dropped);
        },
        py::arg("dataset"), py::arg("train_years"), py::arg("test_years"));

    m.def("haversine_km",
          [](std::pair<double, double> a, std::pair<double, double> b) {
              return haversine_km(a.first, a.second, b.first, b.second);
          },
          py::arg("a"), py::arg("b"), "Great-circle distance between (lon, lat) pairs in km");

    m.def("thin", &thin, py::arg("dataset"), py::arg("min_dist_m"), py::arg("seed") = 0);

    m.def(
        "assign_grid_blocks",
        [](const Dataset& d, double block_km, std::uint64_t seed) {
            const BlockAssignment b = assign_grid_blocks(d, block_km, seed);
            py::dict out;
            out["block_id"] = b.block_id;
            out["n_blocks"] = b.n_blocks;
            out["block_size_km"] = b.block_size_km;
            return out;
        },
        py::arg("dataset"), py::arg("block_km"), py::arg("seed") = 0);

    m.def(
        "sac_range",
        [](const Dataset& d, const std::string& model, std::size_t n_lags, double max_lag_km,
           std::size_t max_pairs, std::uint64_t seed,
           const std::vector<std::size_t>& continuous_features) {
            SacOptions opts;
            opts.model = variogram_model_from_string(model);
            opts.n_lags = n_lags;
            opts.max_lag_km = max_lag_km;
            opts.max_pairs = max_pairs;
            opts.seed = seed;
            opts.continuous_features = continuous_features;
            const SacResult r = sac_range(d, opts);
            py::list per_feature;
            for (const PerFeatureFit& p : r.per_feature) {
                py::dict row;
                row["feature"] = p.feature;
                row["model"] = to_string(p.fit.model);
                row["nugget"] = p.fit.nugget;
                row["partial_sill"] = p.fit.partial_sill;
                row["range_km"] = p.fit.range_km;
                row["effective_range_km"] = p.fit.effective_range_km();
                row["rss"] = p.fit.rss;
                row["degenerate"] = p.fit.degenerate;
                per_feature.append(std::move(row));
            }
            py::dict out;
            out["range_km"] = r.range_km;
            out["per_feature"] = per_feature;
            return out;
        },
        py::arg("dataset"), py::arg("model") = "exponential", py::arg("n_lags") = 15,
        py::arg("max_lag_km") = 0.0, py::arg("max_pairs") = 50000, py::arg("seed") = 0,
        py::arg("continuous_features") = std::vector<std::size_t>{});

    py::class_<Fold>(m, "Fold")
        .def_readonly("train_ids", &Fold::train_ids)
        .def_readonly("val_ids", &Fold::val_ids)
        .def_readonly("val_single_class", &Fold::val_single_class);

    py::class_<FoldPlan>(m, "FoldPlan")
        .def_property_readonly("scheme", [](const FoldPlan& p) { return to_string(p.scheme); })
        .def_property_readonly("n_folds", [](const FoldPlan& p) { return p.folds.size(); })
        .def_property_readonly("folds", [](const FoldPlan& p) { return p.folds; })
        .def("last_fold", &FoldPlan::last_fold, py::return_value_policy::copy)
        .def("write_csv", &FoldPlan::write_csv, py::arg("path"))
        .def("write_json", &FoldPlan::write_json, py::arg("path"))
        .def("serialize", &FoldPlan::serialize);

    m.def("random_kfold", &random_kfold, py::arg("dataset"), py::arg("k"), py::arg("seed") = 0);
    m.def("spatial_blocks_cv", &spatial_blocks_cv, py::arg("dataset"), py::arg("block_km"),
          py::arg("k"), py::arg("seed") = 0);
    m.def("env_blocks_cv", &env_blocks_cv, py::arg("dataset"), py::arg("k"), py::arg("seed") = 0);
    m.def(
        "spatiotemporal_cv",
        [](const Dataset& d, double block_km, std::size_t k_spatial,
           const std::vector<std::pair<int, int>>& intervals, std::uint64_t seed) {
            TemporalIntervals iv;
            for (const auto& [a, b] : intervals) iv.push_back({a, b});
            return spatiotemporal_cv(d, block_km, k_spatial, iv, seed);
        },
        py::arg("dataset"), py::arg("block_km"), py::arg("k_spatial"), py::arg("intervals"),
        py::arg("seed") = 0);
    m.def(
        "tss_cv",
        [](const Dataset& d, const std::vector<std::pair<int, int>>& intervals) {
            TemporalIntervals iv;
            for (const auto& [a, b] : intervals) iv.push_back({a, b});
            return tss_cv(d, iv);
        },
        py::arg("dataset"), py::arg("intervals"));

    m.def(
        "smote",
        [](const Dataset& d, const std::vector<std::int64_t>& ids, double target_presence_ratio,
           std::size_t k_neighbors, std::uint64_t seed) {
            SmoteConfig cfg{target_presence_ratio, k_neighbors, seed};
            return train_table_dict(smote(d, ids, cfg));
        },
        py::arg("dataset"), py::arg("ids"), py::arg("target_presence_ratio") = 0.30,
        py::arg("k_neighbors") = 5, py::arg("seed") = 0);

    py::class_<LearnerSpec>(m, "LearnerSpec")
        .def(py::init([](const std::string& kind, std::uint64_t seed, const py::dict& params) {
                 return spec_from_args(kind, seed, params);
             }),
             py::arg("kind"), py::arg("seed") = 0, py::arg("params") = py::dict())
        .def_property_readonly("kind",
                               [](const LearnerSpec& s) { return to_string(s.kind); })
        .def_readonly("seed", &LearnerSpec::seed)
        .def("to_dict", [](const LearnerSpec& s) {
            py::dict out;
            out["kind"] = to_string(s.kind);
            out["seed"] = s.seed;
            py::dict params;
            const nlohmann::json j = s.to_json()["params"];
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (it->is_number_integer()) params[it.key().c_str()] = it->get<long long>();
                else params[it.key().c_str()] = it->get<double>();
            }
            out["params"] = params;
            return out;
        });

    py::class_<TrainedModel>(m, "TrainedModel")
        .def_property_readonly("n_trees", &TrainedModel::n_trees)
        .def_property_readonly("feature_count", &TrainedModel::feature_count)
        .def("predict_proba",
             [](const TrainedModel& mdl, const std::vector<std::vector<double>>& rows) {
                 return mdl.predict_proba(rows);
             },
             py::arg("rows"))
        .def("save", &TrainedModel::save, py::arg("path"))
        .def_static("load", &TrainedModel::load, py::arg("path"));

    m.def(
        "fit",
        [](const LearnerSpec& spec, const std::vector<std::vector<double>>& X,
           const std::vector<int>& y, int n_jobs) { return fit(spec, X, y, {}, n_jobs); },
        py::arg("spec"), py::arg("X"), py::arg("y"), py::arg("n_jobs") = 1);

    m.def(
        "sample_configs",
        [](const std::string& kind, std::size_t n, std::uint64_t seed) {
            return sample_configs(HyperparamSpace::defaults(learner_kind_from_string(kind)), n,
                                  seed);
        },
        py::arg("kind"), py::arg("n"), py::arg("seed") = 0);

    m.def(
        "cv_evaluate",
        [](const LearnerSpec& spec, const FoldPlan& plan, const Dataset& d,
           const std::optional<py::dict>& smote_cfg, int n_jobs) {
            const ConfigEval e = cv_evaluate(spec, plan, d, smote_from_opt(smote_cfg), n_jobs);
            py::dict out;
            std::vector<std::optional<double>> fold_aucs;
            for (const FoldScore& f : e.folds) {
                fold_aucs.push_back(f.skipped ? std::nullopt : std::optional<double>(f.auc));
            }
            out["fold_aucs"] = fold_aucs;
            out["mean_val_auc"] = e.mean_val_auc;
            out["n_skipped"] = e.n_skipped;
            return out;
        },
        py::arg("spec"), py::arg("plan"), py::arg("dataset"), py::arg("smote") = std::nullopt,
        py::arg("n_jobs") = 1);

    m.def(
        "select_best",
        [](const std::vector<double>& mean_val_aucs) {
            std::vector<ConfigEval> evals(mean_val_aucs.size());
            for (std::size_t i = 0; i < mean_val_aucs.size(); ++i) {
                evals[i].mean_val_auc = mean_val_aucs[i];
            }
            return select_best(evals);
        },
        py::arg("mean_val_aucs"), "Index of the best mean AUC; ties go to the earliest config");

    m.def(
        "finalize",
        [](const std::string& strategy, const LearnerSpec& theta_star, const FoldPlan& plan,
           const Dataset& d_in_time, const std::optional<py::dict>& smote_cfg, int n_jobs) {
            FinalModelBundle b = finalize(strategy_from_string(strategy), theta_star, plan,
                                          d_in_time, smote_from_opt(smote_cfg), n_jobs);
            py::dict info;
            info["strategy"] = to_string(b.strategy);
            info["training_ids"] = b.training_ids;
            info["training_set_size"] = b.training_set_size;
            return py::make_tuple(std::move(b.model), info);
        },
        py::arg("strategy"), py::arg("theta_star"), py::arg("plan"), py::arg("d_in_time"),
        py::arg("smote") = std::nullopt, py::arg("n_jobs") = 1);

    m.def(
        "evaluate_test",
        [](const TrainedModel& model, const Dataset& d_test) {
            FinalModelBundle b;
            b.model = model;
            return evaluate_test(b, d_test);
        },
        py::arg("model"), py::arg("d_test"), "Out-of-time AUC of a fitted model; no refitting");

    m.def("roc_auc", &roc_auc, py::arg("labels"), py::arg("scores"));
    m.def(
        "mae",
        [](const std::vector<double>& validation, const std::vector<double>& test) {
            return mae(ScoreSeries{validation, test});
        },
        py::arg("validation"), py::arg("test"));
    m.def(
        "pearson",
        [](const std::vector<double>& validation, const std::vector<double>& test) {
            return pearson(ScoreSeries{validation, test});
        },
        py::arg("validation"), py::arg("test"));
    m.def(
        "spearman",
        [](const std::vector<double>& validation, const std::vector<double>& test) {
            return spearman(ScoreSeries{validation, test});
        },
        py::arg("validation"), py::arg("test"));

    m.def(
        "simulate_virtual_species",
        [](std::size_t n_points, std::pair<double, double> lon, std::pair<double, double> lat,
           double range_km, std::size_t n_env_features, const std::vector<double>& coefficients,
           double intercept, double noise_rate, std::pair<int, int> years, std::uint64_t seed,
           std::size_t spectral_modes) {
            VirtualSpeciesParams p;
            p.n_points = n_points;
            p.lon_min = lon.first;
            p.lon_max = lon.second;
            p.lat_min = lat.first;
            p.lat_max = lat.second;
            p.range_km = range_km;
            p.n_env_features = n_env_features;
            p.coefficients = coefficients;
            p.intercept = intercept;
            p.noise_rate = noise_rate;
            p.year_min = years.first;
            p.year_max = years.second;
            p.seed = seed;
            p.spectral_modes = spectral_modes;
            return simulate_virtual_species(p);
        },
        py::arg("n_points"), py::arg("lon"), py::arg("lat"), py::arg("range_km"),
        py::arg("n_env_features"), py::arg("coefficients") = std::vector<double>{},
        py::arg("intercept") = 0.0, py::arg("noise_rate") = 0.0,
        py::arg("years") = std::pair<int, int>{2000, 2009}, py::arg("seed") = 0,
        py::arg("spectral_modes") = 2048);

    m.def(
        "run_experiment",
        [](const std::string& config_path, const std::string& out_dir, int jobs,
           const std::optional<std::uint64_t>& seed, const std::string& only_scheme,
           const std::string& only_learner, bool evaluate_tests) {
            ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
            RunOptions opts;
            opts.out_dir = out_dir;
            opts.jobs = jobs;
            opts.seed_override = seed;
            opts.only_scheme = only_scheme;
            opts.only_learner = only_learner;
            opts.evaluate_tests = evaluate_tests;
            const RunResult r = run_experiment(cfg, opts);
            py::list cells;
            for (const CellStatus& c : r.cells) {
                py::dict cell;
                cell["scheme"] = c.scheme;
                cell["learner"] = c.learner;
                cell["ok"] = c.ok;
                cell["error"] = c.error;
                cells.append(std::move(cell));
            }
            py::dict out;
            out["exit_code"] = r.exit_code;
            out["out_dir"] = r.out_dir;
            out["cells"] = cells;
            return out;
        },
        py::arg("config_path"), py::arg("out_dir"), py::arg("jobs") = 1,
        py::arg("seed") = std::nullopt, py::arg("only_scheme") = "",
        py::arg("only_learner") = "", py::arg("evaluate_tests") = true);

    m.def("emit_report", &emit_report, py::arg("bundle_dir"));
}
