#pragma once

#include <cstdint>
#include <vector>

#include "spatialcv/dataset.hpp"

namespace spcv {

/// Controlled virtual-species generator: environmental surfaces are
/// stationary Gaussian random fields with exponential covariance, labels
/// follow a logistic response with optional flip noise.
struct VirtualSpeciesParams {
    std::size_t n_points = 1000;
    double lon_min = 0.0, lon_max = 1.0;
    double lat_min = 0.0, lat_max = 1.0;
    double range_km = 100.0;  // effective SAC range (3x the exponential scale)
    std::size_t n_env_features = 2;
    std::vector<double> coefficients;  // one per feature; empty means all zero
    double intercept = 0.0;
    double noise_rate = 0.0;  // label flip probability, in [0, 0.5)
    int year_min = 2000, year_max = 2009;
    std::uint64_t seed = 0;
    std::size_t spectral_modes = 2048;  // spectral-synthesis resolution
};

/// Evaluates one Gaussian random field realization at planar (km) points.
/// Spectral synthesis: Gaussian amplitudes on frequencies drawn from the
/// exponential covariance's spectral density, so the covariance of the
/// synthesized field matches exp(-h/scale) in expectation.
std::vector<double> sample_gaussian_field(const std::vector<double>& x_km,
                                          const std::vector<double>& y_km, double scale_km,
                                          std::size_t n_modes, std::uint64_t seed);

Dataset simulate_virtual_species(const VirtualSpeciesParams& params);

}  // namespace spcv
