#include "spatialcv/simulate.hpp"

#include <cmath>
#include <string>

#include "spatialcv/common.hpp"
#include "spatialcv/geo.hpp"
#include "spatialcv/rng.hpp"

namespace spcv {

std::vector<double> sample_gaussian_field(const std::vector<double>& x_km,
                                          const std::vector<double>& y_km, double scale_km,
                                          std::size_t n_modes, std::uint64_t seed) {
    require(scale_km > 0.0, "sample_gaussian_field: scale must be > 0");
    require(n_modes >= 1, "sample_gaussian_field: need at least one mode");
    require(x_km.size() == y_km.size(), "sample_gaussian_field: coordinate length mismatch");

    Rng rng(mix_seed(seed, 0xf1e1dull));
    const std::size_t n = x_km.size();
    std::vector<double> field(n, 0.0);

    // Radial spectral density of the 2d exponential covariance has the
    // closed-form inverse CDF w(u) = sqrt((1-u)^-2 - 1) / scale.
    for (std::size_t m = 0; m < n_modes; ++m) {
        const double u = rng.uniform();
        const double w = std::sqrt(1.0 / ((1.0 - u) * (1.0 - u)) - 1.0) / scale_km;
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        const double wx = w * std::cos(theta);
        const double wy = w * std::sin(theta);
        const double a = rng.normal();
        const double b = rng.normal();
        for (std::size_t i = 0; i < n; ++i) {
            const double phase = wx * x_km[i] + wy * y_km[i];
            field[i] += a * std::cos(phase) + b * std::sin(phase);
        }
    }
    const double norm = 1.0 / std::sqrt(static_cast<double>(n_modes));
    for (double& v : field) v *= norm;
    return field;
}

Dataset simulate_virtual_species(const VirtualSpeciesParams& p) {
    require(p.n_points >= 1, "simulate: n_points must be >= 1");
    require(p.lon_min < p.lon_max && p.lat_min < p.lat_max, "simulate: degenerate bounding box");
    require(p.range_km > 0.0, "simulate: range_km must be > 0");
    require(p.n_env_features >= 1, "simulate: need at least one feature");
    require(p.noise_rate >= 0.0 && p.noise_rate < 0.5, "simulate: noise_rate must be in [0, 0.5)");
    require(p.year_min <= p.year_max, "simulate: empty year span");
    require(p.coefficients.empty() || p.coefficients.size() == p.n_env_features,
            "simulate: coefficients length must match n_env_features");

    std::vector<double> coef = p.coefficients;
    if (coef.empty()) coef.assign(p.n_env_features, 0.0);

    Rng rng(mix_seed(p.seed, 0x51e1ull));
    const std::size_t n = p.n_points;
    std::vector<double> lon(n), lat(n), x_km(n), y_km(n);
    const double ref_lat = 0.5 * (p.lat_min + p.lat_max);
    for (std::size_t i = 0; i < n; ++i) {
        lon[i] = rng.uniform(p.lon_min, p.lon_max);
        lat[i] = rng.uniform(p.lat_min, p.lat_max);
        const PlanarPoint pt = to_planar(lon[i], lat[i], ref_lat);
        x_km[i] = pt.x_km;
        y_km[i] = pt.y_km;
    }

    // Effective range of the exponential model is 3x its scale parameter.
    const double scale = p.range_km / 3.0;
    std::vector<std::vector<double>> env(p.n_env_features);
    for (std::size_t f = 0; f < p.n_env_features; ++f) {
        env[f] = sample_gaussian_field(x_km, y_km, scale, p.spectral_modes,
                                       mix_seed(p.seed, 0xfea70ull + f));
    }

    std::vector<Record> recs(n);
    for (std::size_t i = 0; i < n; ++i) {
        Record& r = recs[i];
        r.id = static_cast<std::int64_t>(i);
        r.lon = lon[i];
        r.lat = lat[i];
        r.year = static_cast<int>(rng.uniform_int(p.year_min, p.year_max));
        double response = p.intercept;
        r.features.resize(p.n_env_features);
        for (std::size_t f = 0; f < p.n_env_features; ++f) {
            r.features[f] = env[f][i];
            response += coef[f] * env[f][i];
        }
        const double prob = 1.0 / (1.0 + std::exp(-response));
        r.label = rng.uniform() < prob ? 1 : 0;
        if (p.noise_rate > 0.0 && rng.uniform() < p.noise_rate) r.label = 1 - r.label;
    }

    std::vector<std::string> names;
    names.reserve(p.n_env_features);
    for (std::size_t f = 0; f < p.n_env_features; ++f) names.push_back("env_" + std::to_string(f));
    return Dataset(std::move(recs), std::move(names));
}

}  // namespace spcv
