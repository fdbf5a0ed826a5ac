#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spatialcv/dataset.hpp"

namespace spcv {

struct SmoteConfig {
    double target_presence_ratio = 0.30;
    std::size_t k_neighbors = 5;
    std::uint64_t seed = 0;
};

/// In-memory training table: all originals plus any synthetic presences.
/// Synthetic rows carry no id (kSyntheticId), no coordinates and no year,
/// so they can never re-enter splitting or validation.
struct TrainTable {
    static constexpr std::int64_t kSyntheticId = -1;

    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    std::vector<std::int64_t> source_ids;  // kSyntheticId for synthetic rows
    std::size_t n_synthetic = 0;
    bool no_op = false;  // target ratio already met; input returned unchanged
    std::string notice;
};

/// Materializes a training view: rows for the given ids, sorted ascending by
/// id. The canonical order makes downstream seeded row draws permutation
/// invariant.
TrainTable materialize_train(const Dataset& d, const std::vector<std::int64_t>& ids);

/// SMOTE on a training view. Originals are all retained; synthetic presences
/// are interpolated between a presence row and one of its k nearest presence
/// neighbors (standardized Euclidean) until the target presence ratio holds.
TrainTable smote(const Dataset& d, const std::vector<std::int64_t>& ids, const SmoteConfig& cfg);

/// Same contract, applied to an already-materialized table.
TrainTable smote(const TrainTable& table, const SmoteConfig& cfg);

}  // namespace spcv
