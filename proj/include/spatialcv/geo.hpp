#pragma once

#include <cstdint>
#include <vector>

#include "spatialcv/dataset.hpp"

namespace spcv {

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance in km between (lon, lat) points, degrees in.
double haversine_km(double lon1, double lat1, double lon2, double lat2);

/// Planar coordinates in km: equirectangular projection with longitude
/// scaled by cos(reference latitude). Adequate at regional extents.
struct PlanarPoint {
    double x_km = 0.0;
    double y_km = 0.0;
};

PlanarPoint to_planar(double lon, double lat, double ref_lat_deg);

/// Square-grid block labels for every record. block_ids are contiguous from
/// zero; empty cells get no id.
struct BlockAssignment {
    std::vector<int> block_id;  // parallel to the dataset's records
    double block_size_km = 0.0;
    double origin_lon = 0.0;  // grid anchor, degrees
    double origin_lat = 0.0;

    int n_blocks = 0;
    /// Grid cell coordinates per block id, for adjacency checks.
    std::vector<std::pair<long long, long long>> block_cells;

    void write_csv(const Dataset& d, const std::string& path) const;
};

/// Grid anchored at the bounding-box lower-left corner, shifted by a
/// seed-dependent jitter in [0, block_size) on each axis.
BlockAssignment assign_grid_blocks(const Dataset& d, double block_size_km, std::uint64_t seed);

/// Spatial thinning: drops records until no two retained ones are closer
/// than min_dist_m. Randomized greedy, see module docs; output is maximal
/// (no dropped record can be re-added). Returns retained ids in dataset order.
std::vector<std::int64_t> thin(const Dataset& d, double min_dist_m, std::uint64_t seed);

}  // namespace spcv
