#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spatialcv/dataset.hpp"

namespace spcv {

struct EmpiricalVariogram {
    std::vector<double> lag_centers_km;   // strictly increasing
    std::vector<double> semivariances;    // gamma(h) per lag
    std::vector<std::size_t> pair_counts;
};

enum class VariogramModel { kSpherical, kExponential };

std::string to_string(VariogramModel m);
VariogramModel variogram_model_from_string(const std::string& s);

struct FittedVariogram {
    VariogramModel model = VariogramModel::kExponential;
    double nugget = 0.0;
    double partial_sill = 0.0;
    double range_km = 0.0;  // fitted range parameter
    double rss = 0.0;       // weighted residual sum of squares
    bool degenerate = false;

    /// Spherical: the fitted range. Exponential: 3x the fitted parameter.
    double effective_range_km() const {
        return model == VariogramModel::kExponential ? 3.0 * range_km : range_km;
    }
};

/// Model semivariance at lag h (km).
double variogram_value(VariogramModel model, double nugget, double partial_sill, double range_km,
                       double h_km);

/// Matheron estimator over pairs binned by haversine distance into n_lags
/// equal-width bins up to max_lag_km. When the total pair count exceeds
/// max_pairs, a seed-deterministic uniform subsample of pairs is used.
/// Empty bins are dropped; fewer than 3 surviving bins is an error.
EmpiricalVariogram empirical_variogram(const Dataset& d, std::size_t feature_index,
                                       std::size_t n_lags, double max_lag_km,
                                       std::size_t max_pairs, std::uint64_t seed);

/// Weighted least squares (weights = pair counts) over (nugget, partial
/// sill, range) via multi-start bounded Nelder-Mead, 16 seeded starts.
FittedVariogram fit_variogram(const EmpiricalVariogram& v, VariogramModel model);

struct SacOptions {
    std::size_t n_lags = 15;
    double max_lag_km = 0.0;  // <= 0: half the bounding-box diagonal
    std::size_t max_pairs = 50000;
    std::uint64_t seed = 0;
    VariogramModel model = VariogramModel::kExponential;
    /// Feature indices treated as continuous. Empty: every non-binary feature.
    std::vector<std::size_t> continuous_features;
};

struct PerFeatureFit {
    std::string feature;
    FittedVariogram fit;
};

struct SacResult {
    double range_km = 0.0;  // median effective range over non-degenerate fits
    std::vector<PerFeatureFit> per_feature;

    void write_csv(const std::string& path) const;
};

/// Fits per-feature variograms and aggregates effective ranges by median.
/// Degenerate fits are excluded from the median; all-degenerate is an error.
SacResult sac_range(const Dataset& d, const SacOptions& opts);

/// Half the haversine diagonal of the dataset bounding box.
double default_max_lag_km(const Dataset& d);

}  // namespace spcv
