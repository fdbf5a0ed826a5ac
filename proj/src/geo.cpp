#include "spatialcv/geo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "spatialcv/common.hpp"
#include "spatialcv/rng.hpp"

namespace spcv {

namespace {
constexpr double kDegToRad = M_PI / 180.0;
}

double haversine_km(double lon1, double lat1, double lon2, double lat2) {
    const double phi1 = lat1 * kDegToRad;
    const double phi2 = lat2 * kDegToRad;
    const double dphi = (lat2 - lat1) * kDegToRad;
    const double dlam = (lon2 - lon1) * kDegToRad;
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlam / 2.0);
    const double a = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

PlanarPoint to_planar(double lon, double lat, double ref_lat_deg) {
    PlanarPoint p;
    p.x_km = kEarthRadiusKm * std::cos(ref_lat_deg * kDegToRad) * lon * kDegToRad;
    p.y_km = kEarthRadiusKm * lat * kDegToRad;
    return p;
}

BlockAssignment assign_grid_blocks(const Dataset& d, double block_size_km, std::uint64_t seed) {
    require(block_size_km > 0.0, "assign_grid_blocks: block_size_km must be > 0");
    require(!d.empty(), "assign_grid_blocks: dataset is empty");

    double lat_sum = 0.0;
    double min_lon = d.record(0).lon, min_lat = d.record(0).lat;
    for (const Record& r : d.records()) {
        lat_sum += r.lat;
        min_lon = std::min(min_lon, r.lon);
        min_lat = std::min(min_lat, r.lat);
    }
    const double ref_lat = lat_sum / static_cast<double>(d.size());

    Rng rng(mix_seed(seed, 0x6b1cull));
    const double jitter_x = rng.uniform() * block_size_km;
    const double jitter_y = rng.uniform() * block_size_km;

    const PlanarPoint lower_left = to_planar(min_lon, min_lat, ref_lat);
    const double anchor_x = lower_left.x_km - jitter_x;
    const double anchor_y = lower_left.y_km - jitter_y;

    std::vector<std::pair<long long, long long>> cells(d.size());
    std::map<std::pair<long long, long long>, int> cell_ids;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const Record& r = d.record(i);
        const PlanarPoint p = to_planar(r.lon, r.lat, ref_lat);
        const long long ix = static_cast<long long>(std::floor((p.x_km - anchor_x) / block_size_km));
        const long long iy = static_cast<long long>(std::floor((p.y_km - anchor_y) / block_size_km));
        cells[i] = {iy, ix};
        cell_ids.emplace(cells[i], 0);
    }
    int next = 0;
    for (auto& [cell, id] : cell_ids) id = next++;  // ids ordered by (row, col)

    BlockAssignment out;
    out.block_size_km = block_size_km;
    out.origin_lon = anchor_x / (kEarthRadiusKm * std::cos(ref_lat * kDegToRad)) / kDegToRad;
    out.origin_lat = anchor_y / kEarthRadiusKm / kDegToRad;
    out.n_blocks = next;
    out.block_id.resize(d.size());
    out.block_cells.resize(next);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const int id = cell_ids[cells[i]];
        out.block_id[i] = id;
        out.block_cells[id] = {cells[i].second, cells[i].first};  // (ix, iy)
    }
    return out;
}

void BlockAssignment::write_csv(const Dataset& d, const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "BlockAssignment::write_csv: cannot open " + path);
    out << "id,block_id\n";
    for (std::size_t i = 0; i < d.size(); ++i) {
        out << d.record(i).id << ',' << block_id[i] << '\n';
    }
}

std::vector<std::int64_t> thin(const Dataset& d, double min_dist_m, std::uint64_t seed) {
    require(min_dist_m > 0.0, "thin: min_dist_m must be > 0");
    const std::size_t n = d.size();
    const double min_dist_km = min_dist_m / 1000.0;

    // Conflict graph over pairs closer than min_dist. O(n^2) pair scan; fine
    // for thinning-scale inputs.
    std::vector<std::vector<std::size_t>> conflicts(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Record& a = d.record(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const Record& b = d.record(j);
            if (haversine_km(a.lon, a.lat, b.lon, b.lat) < min_dist_km) {
                conflicts[i].push_back(j);
                conflicts[j].push_back(i);
            }
        }
    }

    std::vector<bool> removed(n, false);
    std::vector<std::size_t> degree(n);
    for (std::size_t i = 0; i < n; ++i) degree[i] = conflicts[i].size();

    Rng rng(mix_seed(seed, 0x7417ull));
    while (true) {
        std::size_t worst = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!removed[i] && degree[i] > worst) worst = degree[i];
        }
        if (worst == 0) break;
        std::vector<std::size_t> tied;
        for (std::size_t i = 0; i < n; ++i) {
            if (!removed[i] && degree[i] == worst) tied.push_back(i);
        }
        const std::size_t victim = tied[rng.below(tied.size())];
        removed[victim] = true;
        for (std::size_t j : conflicts[victim]) {
            if (!removed[j]) --degree[j];
        }
    }

    // Re-add pass: a record removed early may have lost all its retained
    // conflicts to later removals. Dataset order keeps this deterministic.
    for (std::size_t i = 0; i < n; ++i) {
        if (!removed[i]) continue;
        bool clear = true;
        for (std::size_t j : conflicts[i]) {
            if (!removed[j]) {
                clear = false;
                break;
            }
        }
        if (clear) removed[i] = false;
    }

    std::vector<std::int64_t> retained;
    for (std::size_t i = 0; i < n; ++i) {
        if (!removed[i]) retained.push_back(d.record(i).id);
    }
    return retained;
}

}  // namespace spcv
