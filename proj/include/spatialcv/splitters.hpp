#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "spatialcv/dataset.hpp"

namespace spcv {

enum class Scheme { kRandom, kSpatial, kEnvironmental, kSpatioTemporal, kTss };

std::string to_string(Scheme s);

struct Fold {
    std::vector<std::int64_t> train_ids;  // sorted ascending
    std::vector<std::int64_t> val_ids;    // sorted ascending
    /// Validation side holds a single class; kept but excluded from mean AUC.
    bool val_single_class = false;
};

/// Ordered folds plus scheme metadata. Fold order is load-bearing: the last
/// fold's training subset is what the LAST FOLD strategy trains on.
struct FoldPlan {
    Scheme scheme = Scheme::kRandom;
    std::uint64_t seed = 0;
    nlohmann::json params;  // scheme parameters, serialized into the header
    std::vector<Fold> folds;

    const Fold& last_fold() const;

    /// CSV body: (record_id, fold_index, role) rows, repeated per fold.
    void write_csv(const std::string& path) const;
    /// JSON header: scheme, params, seed, per-fold flags.
    void write_json(const std::string& path) const;
    std::string body_csv() const;
    std::string header_json() const;
    /// Canonical byte serialization (header + body), for determinism checks.
    std::string serialize() const;
};

/// Ordered, non-overlapping inclusive year ranges.
using TemporalIntervals = std::vector<YearRange>;

/// Throws unless intervals are valid, strictly increasing, and every record
/// year is covered by exactly one interval.
void validate_intervals(const Dataset& d, const TemporalIntervals& intervals);

/// Seed-deterministic permutation split into k near-equal validation sets.
FoldPlan random_kfold(const Dataset& d, std::size_t k, std::uint64_t seed);

/// Grid blocks allocated to k folds by seeded greedy size balancing
/// (largest block first onto the smallest fold).
FoldPlan spatial_blocks_cv(const Dataset& d, double block_km, std::size_t k, std::uint64_t seed);

/// K-means clusters in standardized feature space, one fold per cluster,
/// with class-balance repair so every cluster holds both classes.
FoldPlan env_blocks_cv(const Dataset& d, std::size_t k, std::uint64_t seed);

/// Spatial k-fold plans built independently inside each temporal interval;
/// training never crosses intervals. Folds ordered by (interval, spatial fold).
FoldPlan spatiotemporal_cv(const Dataset& d, double block_km, std::size_t k_spatial,
                           const TemporalIntervals& intervals, std::uint64_t seed);

/// Forward chaining: fold j trains on intervals 1..j and validates on j+1.
FoldPlan tss_cv(const Dataset& d, const TemporalIntervals& intervals);

}  // namespace spcv
