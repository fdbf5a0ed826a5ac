#include "spatialcv/variogram.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "spatialcv/common.hpp"
#include "spatialcv/geo.hpp"
#include "spatialcv/optimize.hpp"
#include "spatialcv/rng.hpp"

namespace spcv {

std::string to_string(VariogramModel m) {
    return m == VariogramModel::kSpherical ? "spherical" : "exponential";
}

VariogramModel variogram_model_from_string(const std::string& s) {
    if (s == "spherical") return VariogramModel::kSpherical;
    if (s == "exponential") return VariogramModel::kExponential;
    throw Error("unknown variogram model: " + s);
}

double variogram_value(VariogramModel model, double nugget, double partial_sill, double range_km,
                       double h_km) {
    if (h_km <= 0.0) return nugget;
    if (model == VariogramModel::kSpherical) {
        if (h_km >= range_km) return nugget + partial_sill;
        const double r = h_km / range_km;
        return nugget + partial_sill * (1.5 * r - 0.5 * r * r * r);
    }
    return nugget + partial_sill * (1.0 - std::exp(-h_km / range_km));
}

double default_max_lag_km(const Dataset& d) {
    require(!d.empty(), "default_max_lag_km: dataset is empty");
    double min_lon = d.record(0).lon, max_lon = min_lon;
    double min_lat = d.record(0).lat, max_lat = min_lat;
    for (const Record& r : d.records()) {
        min_lon = std::min(min_lon, r.lon);
        max_lon = std::max(max_lon, r.lon);
        min_lat = std::min(min_lat, r.lat);
        max_lat = std::max(max_lat, r.lat);
    }
    return 0.5 * haversine_km(min_lon, min_lat, max_lon, max_lat);
}

namespace {

// Linear index -> (i, j) with i < j over n(n-1)/2 pairs.
std::pair<std::size_t, std::size_t> pair_from_index(std::uint64_t idx, std::size_t n) {
    // Row i starts at offset i*n - i*(i+1)/2 - i ... solve by scanning rows is
    // O(n); use the closed form via the quadratic formula instead.
    const double nn = static_cast<double>(n);
    const double b = 2.0 * nn - 1.0;
    double i_f = std::floor((b - std::sqrt(b * b - 8.0 * static_cast<double>(idx))) / 2.0);
    auto row_start = [&](std::uint64_t i) {
        return i * (2 * n - i - 1) / 2;
    };
    std::uint64_t i = static_cast<std::uint64_t>(std::max(0.0, i_f));
    while (i + 1 < n && row_start(i + 1) <= idx) ++i;
    while (i > 0 && row_start(i) > idx) --i;
    const std::uint64_t j = i + 1 + (idx - row_start(i));
    return {static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
}

}  // namespace

EmpiricalVariogram empirical_variogram(const Dataset& d, std::size_t feature_index,
                                       std::size_t n_lags, double max_lag_km,
                                       std::size_t max_pairs, std::uint64_t seed) {
    require(n_lags >= 3, "empirical_variogram: n_lags must be >= 3");
    require(max_lag_km > 0.0, "empirical_variogram: max_lag_km must be > 0");
    require(feature_index < d.n_features(), "empirical_variogram: feature_index out of range");
    const std::size_t n = d.size();
    require(n >= 2, "empirical_variogram: need at least 2 records");

    const double bin_width = max_lag_km / static_cast<double>(n_lags);
    std::vector<double> sq_diff_sum(n_lags, 0.0);
    std::vector<std::size_t> counts(n_lags, 0);

    auto add_pair = [&](std::size_t i, std::size_t j) {
        const Record& a = d.record(i);
        const Record& b = d.record(j);
        const double h = haversine_km(a.lon, a.lat, b.lon, b.lat);
        if (h > max_lag_km) return;
        std::size_t bin = h >= max_lag_km ? n_lags - 1
                                          : static_cast<std::size_t>(h / bin_width);
        if (bin >= n_lags) bin = n_lags - 1;
        const double dz = a.features[feature_index] - b.features[feature_index];
        sq_diff_sum[bin] += dz * dz;
        ++counts[bin];
    };

    const std::uint64_t total_pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    if (total_pairs <= max_pairs) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) add_pair(i, j);
        }
    } else {
        // Uniform sample of distinct pair indices.
        Rng rng(mix_seed(seed, 0x9a11ull));
        std::set<std::uint64_t> chosen;
        while (chosen.size() < max_pairs) chosen.insert(rng.below(total_pairs));
        for (std::uint64_t idx : chosen) {
            const auto [i, j] = pair_from_index(idx, n);
            add_pair(i, j);
        }
    }

    EmpiricalVariogram out;
    for (std::size_t b = 0; b < n_lags; ++b) {
        if (counts[b] == 0) continue;
        out.lag_centers_km.push_back((static_cast<double>(b) + 0.5) * bin_width);
        out.semivariances.push_back(sq_diff_sum[b] / (2.0 * static_cast<double>(counts[b])));
        out.pair_counts.push_back(counts[b]);
    }
    require(out.lag_centers_km.size() >= 3,
            "empirical_variogram: fewer than 3 non-empty lag bins");
    return out;
}

FittedVariogram fit_variogram(const EmpiricalVariogram& v, VariogramModel model) {
    const std::size_t nbins = v.lag_centers_km.size();
    require(nbins >= 3, "fit_variogram: need >= 3 bins");
    require(v.semivariances.size() == nbins && v.pair_counts.size() == nbins,
            "fit_variogram: field lengths differ");

    const double max_gamma = *std::max_element(v.semivariances.begin(), v.semivariances.end());
    const double max_lag = v.lag_centers_km.back();
    double mean_gamma = 0.0;
    for (double g : v.semivariances) mean_gamma += g;
    mean_gamma /= static_cast<double>(nbins);

    const std::vector<double> lower = {0.0, 0.0, 2.0 * max_lag * 1e-9};
    const std::vector<double> upper = {std::max(max_gamma, 1e-300), 2.0 * std::max(max_gamma, 1e-300),
                                       2.0 * max_lag};

    auto objective = [&](const std::vector<double>& p) {
        double rss = 0.0;
        for (std::size_t k = 0; k < nbins; ++k) {
            const double m = variogram_value(model, p[0], p[1], p[2], v.lag_centers_km[k]);
            const double r = m - v.semivariances[k];
            rss += static_cast<double>(v.pair_counts[k]) * r * r;
        }
        return rss;
    };

    // 16 seeded random starts plus the flat model (nugget = mean gamma,
    // sill 0). The flat start guarantees the fit never loses to the
    // constant-mean baseline.
    Rng rng(mix_seed(0x5ac0u, static_cast<std::uint64_t>(model)));
    std::vector<std::vector<double>> starts;
    starts.push_back({mean_gamma, 0.0, max_lag});
    for (int s = 0; s < 16; ++s) {
        starts.push_back({rng.uniform(lower[0], upper[0]), rng.uniform(lower[1], upper[1]),
                          rng.uniform(lower[2], upper[2])});
    }

    bool any_finite = false;
    std::vector<double> best_x;
    double best_rss = 0.0;
    for (const auto& start : starts) {
        const NelderMeadResult r = nelder_mead(objective, start, lower, upper);
        if (!std::isfinite(r.value)) continue;
        if (!any_finite || r.value < best_rss) {
            any_finite = true;
            best_rss = r.value;
            best_x = r.x;
        }
    }
    require(any_finite, "fit_variogram: non-finite objective on all starts");

    FittedVariogram out;
    out.model = model;
    out.nugget = best_x[0];
    out.partial_sill = best_x[1];
    out.range_km = best_x[2];
    out.rss = best_rss;
    out.degenerate = max_gamma <= 0.0 || out.partial_sill <= 1e-12 * std::max(1.0, max_gamma);
    return out;
}

SacResult sac_range(const Dataset& d, const SacOptions& opts) {
    require(!d.empty(), "sac_range: dataset is empty");
    const double max_lag = opts.max_lag_km > 0.0 ? opts.max_lag_km : default_max_lag_km(d);

    std::vector<std::size_t> features = opts.continuous_features;
    if (features.empty()) {
        // Auto-detect: skip features with at most two distinct values.
        for (std::size_t f = 0; f < d.n_features(); ++f) {
            std::set<double> distinct;
            for (const Record& r : d.records()) {
                distinct.insert(r.features[f]);
                if (distinct.size() > 2) break;
            }
            if (distinct.size() > 2) features.push_back(f);
        }
    }
    require(!features.empty(), "sac_range: no continuous features to fit");

    SacResult res;
    std::vector<double> effective_ranges;
    for (std::size_t f : features) {
        require(f < d.n_features(), "sac_range: feature index out of range");
        // One shared pair subsample across features keeps the median
        // invariant to feature order.
        const EmpiricalVariogram ev =
            empirical_variogram(d, f, opts.n_lags, max_lag, opts.max_pairs, opts.seed);
        const FittedVariogram fit = fit_variogram(ev, opts.model);
        res.per_feature.push_back({d.feature_names()[f], fit});
        if (!fit.degenerate) effective_ranges.push_back(fit.effective_range_km());
    }
    require(!effective_ranges.empty(), "sac_range: all per-feature fits degenerate");

    std::sort(effective_ranges.begin(), effective_ranges.end());
    const std::size_t m = effective_ranges.size();
    res.range_km = (m % 2 == 1) ? effective_ranges[m / 2]
                                : 0.5 * (effective_ranges[m / 2 - 1] + effective_ranges[m / 2]);
    return res;
}

void SacResult::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "SacResult::write_csv: cannot open " + path);
    out << "feature,model,nugget,partial_sill,range_km,effective_range_km,rss,degenerate\n";
    for (const PerFeatureFit& p : per_feature) {
        out << p.feature << ',' << to_string(p.fit.model) << ',' << fmt_double(p.fit.nugget) << ','
            << fmt_double(p.fit.partial_sill) << ',' << fmt_double(p.fit.range_km) << ','
            << fmt_double(p.fit.effective_range_km()) << ',' << fmt_double(p.fit.rss) << ','
            << (p.fit.degenerate ? 1 : 0) << '\n';
    }
}

}  // namespace spcv
