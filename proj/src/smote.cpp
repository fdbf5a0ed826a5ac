#include "spatialcv/smote.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spatialcv/common.hpp"
#include "spatialcv/rng.hpp"

namespace spcv {

TrainTable materialize_train(const Dataset& d, const std::vector<std::int64_t>& ids) {
    std::vector<std::int64_t> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    TrainTable t;
    t.features.reserve(sorted.size());
    t.labels.reserve(sorted.size());
    t.source_ids = sorted;
    for (std::int64_t id : sorted) {
        const Record& r = d.record(d.index_of(id));
        t.features.push_back(r.features);
        t.labels.push_back(r.label);
    }
    return t;
}

TrainTable smote(const Dataset& d, const std::vector<std::int64_t>& ids, const SmoteConfig& cfg) {
    return smote(materialize_train(d, ids), cfg);
}

TrainTable smote(const TrainTable& table, const SmoteConfig& cfg) {
    require(cfg.target_presence_ratio > 0.0 && cfg.target_presence_ratio < 1.0,
            "smote: target_presence_ratio must be in (0, 1)");
    require(cfg.k_neighbors >= 1, "smote: k_neighbors must be >= 1");
    require(!table.features.empty(), "smote: empty training table");

    std::vector<std::size_t> minority;  // presence rows
    std::size_t n_abs = 0;
    for (std::size_t i = 0; i < table.labels.size(); ++i) {
        if (table.labels[i] == 1) minority.push_back(i);
        else ++n_abs;
    }
    const std::size_t n_pres = minority.size();
    const double r = cfg.target_presence_ratio;

    const double current = static_cast<double>(n_pres) / static_cast<double>(n_pres + n_abs);
    if (current >= r) {
        TrainTable out = table;
        out.n_synthetic = 0;
        out.no_op = true;
        out.notice = "smote: presence ratio " + fmt_double(current) +
                     " already meets target " + fmt_double(r) + "; input unchanged";
        return out;
    }
    require(n_pres >= 2, "smote: need at least 2 presence records to synthesize");

    const auto target_pres = static_cast<std::size_t>(
        std::ceil(r * static_cast<double>(n_abs) / (1.0 - r)));
    const std::size_t n_syn = target_pres - n_pres;

    // Standardized Euclidean over the training view.
    const std::size_t p = table.features[0].size();
    std::vector<double> mean(p, 0.0), sd(p, 0.0);
    for (const auto& row : table.features) {
        for (std::size_t f = 0; f < p; ++f) mean[f] += row[f];
    }
    for (double& m : mean) m /= static_cast<double>(table.features.size());
    for (const auto& row : table.features) {
        for (std::size_t f = 0; f < p; ++f) {
            const double c = row[f] - mean[f];
            sd[f] += c * c;
        }
    }
    for (double& s : sd) {
        s = std::sqrt(s / static_cast<double>(table.features.size()));
        if (s <= 0.0) s = 1.0;
    }
    auto std_dist2 = [&](std::size_t a, std::size_t b) {
        double acc = 0.0;
        for (std::size_t f = 0; f < p; ++f) {
            const double c = (table.features[a][f] - table.features[b][f]) / sd[f];
            acc += c * c;
        }
        return acc;
    };

    // k nearest presence neighbors per presence row; k clamps to n_pres - 1.
    const std::size_t k = std::min(cfg.k_neighbors, n_pres - 1);
    std::vector<std::vector<std::size_t>> neighbors(n_pres);
    for (std::size_t a = 0; a < n_pres; ++a) {
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(n_pres - 1);
        for (std::size_t b = 0; b < n_pres; ++b) {
            if (b == a) continue;
            dist.emplace_back(std_dist2(minority[a], minority[b]), minority[b]);
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        neighbors[a].reserve(k);
        for (std::size_t t = 0; t < k; ++t) neighbors[a].push_back(dist[t].second);
    }

    TrainTable out = table;
    out.n_synthetic = n_syn;
    out.notice = "smote: synthesized " + std::to_string(n_syn) + " presence rows";

    Rng rng(mix_seed(cfg.seed, 0x5307eull));
    std::vector<std::size_t> base_order(n_pres);
    std::iota(base_order.begin(), base_order.end(), 0);
    rng.shuffle(base_order);

    for (std::size_t s = 0; s < n_syn; ++s) {
        const std::size_t a = base_order[s % n_pres];
        const std::size_t base_row = minority[a];
        const std::size_t nn_row = neighbors[a][rng.below(neighbors[a].size())];
        const double u = rng.uniform();
        std::vector<double> row(p);
        for (std::size_t f = 0; f < p; ++f) {
            row[f] = table.features[base_row][f] +
                     u * (table.features[nn_row][f] - table.features[base_row][f]);
        }
        out.features.push_back(std::move(row));
        out.labels.push_back(1);
        out.source_ids.push_back(TrainTable::kSyntheticId);
    }
    return out;
}

}  // namespace spcv
