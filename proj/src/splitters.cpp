#include "spatialcv/splitters.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "spatialcv/common.hpp"
#include "spatialcv/geo.hpp"
#include "spatialcv/rng.hpp"

namespace spcv {

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::kRandom: return "random";
        case Scheme::kSpatial: return "spatial";
        case Scheme::kEnvironmental: return "environmental";
        case Scheme::kSpatioTemporal: return "spatio_temporal";
        case Scheme::kTss: return "tss";
    }
    return "unknown";
}

const Fold& FoldPlan::last_fold() const {
    require(!folds.empty(), "FoldPlan: no folds");
    return folds.back();
}

namespace {

bool single_class(const Dataset& d, const std::vector<std::int64_t>& ids) {
    bool seen0 = false, seen1 = false;
    for (std::int64_t id : ids) {
        if (d.record(d.index_of(id)).label == 1) seen1 = true;
        else seen0 = true;
        if (seen0 && seen1) return false;
    }
    return true;
}

Fold make_fold(const Dataset& d, std::vector<std::int64_t> train, std::vector<std::int64_t> val) {
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
    require(!train.empty() && !val.empty(), "fold: train and val must be non-empty");
    std::vector<std::int64_t> both;
    std::set_intersection(train.begin(), train.end(), val.begin(), val.end(),
                          std::back_inserter(both));
    require(both.empty(), "fold: train and val overlap");
    Fold f;
    f.train_ids = std::move(train);
    f.val_ids = std::move(val);
    f.val_single_class = single_class(d, f.val_ids);
    return f;
}

/// Folds from a per-record group label: fold g validates on group g.
std::vector<Fold> folds_from_groups(const Dataset& d, const std::vector<int>& group,
                                    std::size_t k) {
    std::vector<std::vector<std::int64_t>> vals(k);
    for (std::size_t i = 0; i < d.size(); ++i) {
        vals[static_cast<std::size_t>(group[i])].push_back(d.record(i).id);
    }
    std::vector<Fold> folds;
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<std::int64_t> train;
        for (std::size_t g = 0; g < k; ++g) {
            if (g == j) continue;
            train.insert(train.end(), vals[g].begin(), vals[g].end());
        }
        folds.push_back(make_fold(d, std::move(train), vals[j]));
    }
    return folds;
}

}  // namespace

FoldPlan random_kfold(const Dataset& d, std::size_t k, std::uint64_t seed) {
    require(k >= 2, "random_kfold: k must be >= 2");
    require(d.size() >= k, "random_kfold: k exceeds record count");

    std::vector<std::size_t> perm(d.size());
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(mix_seed(seed, 0x4a5ull));
    rng.shuffle(perm);

    std::vector<int> group(d.size(), 0);
    const std::size_t base = d.size() / k;
    const std::size_t extra = d.size() % k;
    std::size_t pos = 0;
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t len = base + (j < extra ? 1 : 0);
        for (std::size_t t = 0; t < len; ++t) group[perm[pos++]] = static_cast<int>(j);
    }

    FoldPlan plan;
    plan.scheme = Scheme::kRandom;
    plan.seed = seed;
    plan.params = {{"k", k}};
    plan.folds = folds_from_groups(d, group, k);
    return plan;
}

namespace {

/// Greedy size balancing: blocks in descending record count onto the
/// currently smallest fold; both tie kinds broken by the seeded rng.
std::vector<int> allocate_blocks(const std::vector<std::size_t>& block_counts, std::size_t k,
                                 Rng& rng) {
    const std::size_t n_blocks = block_counts.size();
    std::vector<std::size_t> order(n_blocks);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return block_counts[a] > block_counts[b];
    });

    std::vector<int> fold_of_block(n_blocks, -1);
    std::vector<std::size_t> fold_sizes(k, 0);
    for (std::size_t b : order) {
        std::size_t smallest = *std::min_element(fold_sizes.begin(), fold_sizes.end());
        std::vector<std::size_t> tied;
        for (std::size_t j = 0; j < k; ++j) {
            if (fold_sizes[j] == smallest) tied.push_back(j);
        }
        const std::size_t j = tied[rng.below(tied.size())];
        fold_of_block[b] = static_cast<int>(j);
        fold_sizes[j] += block_counts[b];
    }
    return fold_of_block;
}

std::vector<Fold> spatial_folds(const Dataset& d, double block_km, std::size_t k,
                                std::uint64_t seed) {
    const BlockAssignment blocks = assign_grid_blocks(d, block_km, seed);
    require(static_cast<std::size_t>(blocks.n_blocks) >= k,
            "spatial_blocks_cv: fewer non-empty blocks (" + std::to_string(blocks.n_blocks) +
                ") than folds (" + std::to_string(k) + ")");

    std::vector<std::size_t> counts(blocks.n_blocks, 0);
    for (int b : blocks.block_id) ++counts[static_cast<std::size_t>(b)];

    Rng rng(mix_seed(seed, 0xa110ull));
    const std::vector<int> fold_of_block = allocate_blocks(counts, k, rng);

    std::vector<int> group(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        group[i] = fold_of_block[static_cast<std::size_t>(blocks.block_id[i])];
    }
    return folds_from_groups(d, group, k);
}

}  // namespace

FoldPlan spatial_blocks_cv(const Dataset& d, double block_km, std::size_t k, std::uint64_t seed) {
    require(k >= 2, "spatial_blocks_cv: k must be >= 2");
    require(block_km > 0.0, "spatial_blocks_cv: block_km must be > 0");

    FoldPlan plan;
    plan.scheme = Scheme::kSpatial;
    plan.seed = seed;
    plan.params = {{"k", k}, {"block_km", block_km}};
    plan.folds = spatial_folds(d, block_km, k, seed);
    return plan;
}

namespace {

struct Standardized {
    std::vector<std::vector<double>> rows;
};

Standardized standardize_features(const Dataset& d) {
    const std::size_t n = d.size();
    const std::size_t p = d.n_features();
    std::vector<double> mean(p, 0.0), sd(p, 0.0);
    for (const Record& r : d.records()) {
        for (std::size_t f = 0; f < p; ++f) mean[f] += r.features[f];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    for (const Record& r : d.records()) {
        for (std::size_t f = 0; f < p; ++f) {
            const double c = r.features[f] - mean[f];
            sd[f] += c * c;
        }
    }
    for (double& s : sd) {
        s = std::sqrt(s / static_cast<double>(n));
        if (s <= 0.0) s = 1.0;
    }
    Standardized out;
    out.rows.resize(n, std::vector<double>(p));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < p; ++f) {
            out.rows[i][f] = (d.record(i).features[f] - mean[f]) / sd[f];
        }
    }
    return out;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double c = a[i] - b[i];
        s += c * c;
    }
    return s;
}

struct KMeansResult {
    std::vector<int> assignment;
    std::vector<std::vector<double>> centers;
};

KMeansResult kmeans(const std::vector<std::vector<double>>& rows, std::size_t k, Rng& rng) {
    const std::size_t n = rows.size();

    // k-means++ seeding
    std::vector<std::vector<double>> centers;
    centers.push_back(rows[rng.below(n)]);
    std::vector<double> d2(n);
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = sq_dist(rows[i], centers[0]);
            for (std::size_t c = 1; c < centers.size(); ++c) {
                best = std::min(best, sq_dist(rows[i], centers[c]));
            }
            d2[i] = best;
            total += best;
        }
        std::size_t pick;
        if (total <= 0.0) {
            pick = rng.below(n);
        } else {
            const double u = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > u) {
                    pick = i;
                    break;
                }
            }
        }
        centers.push_back(rows[pick]);
    }

    std::vector<int> assign(n, 0);
    for (int iter = 0; iter < 300; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double best = sq_dist(rows[i], centers[0]);
            int who = 0;
            for (std::size_t c = 1; c < k; ++c) {
                const double v = sq_dist(rows[i], centers[c]);
                if (v < best) {
                    best = v;
                    who = static_cast<int>(c);
                }
            }
            assign[i] = who;
        }

        std::vector<std::vector<double>> next(k, std::vector<double>(rows[0].size(), 0.0));
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(assign[i]);
            ++sizes[c];
            for (std::size_t f = 0; f < rows[i].size(); ++f) next[c][f] += rows[i][f];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] == 0) {
                // Re-seed an empty cluster with the point farthest from its
                // current center.
                double worst = -1.0;
                std::size_t who = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double v = sq_dist(rows[i], centers[static_cast<std::size_t>(assign[i])]);
                    if (v > worst) {
                        worst = v;
                        who = i;
                    }
                }
                next[c] = rows[who];
                assign[who] = static_cast<int>(c);
            } else {
                for (double& v : next[c]) v /= static_cast<double>(sizes[c]);
            }
        }

        double moved = 0.0;
        for (std::size_t c = 0; c < k; ++c) moved = std::max(moved, sq_dist(next[c], centers[c]));
        centers = std::move(next);
        if (std::sqrt(moved) <= 1e-6) break;
    }

    // Final assignment against the converged centers.
    for (std::size_t i = 0; i < n; ++i) {
        double best = sq_dist(rows[i], centers[0]);
        int who = 0;
        for (std::size_t c = 1; c < k; ++c) {
            const double v = sq_dist(rows[i], centers[c]);
            if (v < best) {
                best = v;
                who = static_cast<int>(c);
            }
        }
        assign[i] = who;
    }
    return {std::move(assign), std::move(centers)};
}

}  // namespace

FoldPlan env_blocks_cv(const Dataset& d, std::size_t k, std::uint64_t seed) {
    require(k >= 2, "env_blocks_cv: k must be >= 2");
    const ClassCounts cc = class_counts(d);
    require(cc.n_presence > 0 && cc.n_absence > 0, "env_blocks_cv: both classes required");
    require(cc.n_presence >= k && cc.n_absence >= k,
            "env_blocks_cv: a class has fewer records than k; repair infeasible");

    const Standardized std_rows = standardize_features(d);
    Rng rng(mix_seed(seed, 0xe2cull));
    KMeansResult km = kmeans(std_rows.rows, k, rng);

    // Class-balance repair: while a cluster lacks a class, pull in the
    // nearest record of that class from a cluster that can spare one.
    const std::size_t n = d.size();
    while (true) {
        std::vector<std::vector<std::size_t>> count(k, std::vector<std::size_t>(2, 0));
        for (std::size_t i = 0; i < n; ++i) {
            ++count[static_cast<std::size_t>(km.assignment[i])]
                   [static_cast<std::size_t>(d.record(i).label)];
        }
        bool fixed_any = false;
        for (std::size_t c = 0; c < k && !fixed_any; ++c) {
            for (int label = 0; label < 2 && !fixed_any; ++label) {
                if (count[c][static_cast<std::size_t>(label)] > 0) continue;
                double best = 0.0;
                std::ptrdiff_t who = -1;
                for (std::size_t i = 0; i < n; ++i) {
                    if (d.record(i).label != label) continue;
                    const auto home = static_cast<std::size_t>(km.assignment[i]);
                    if (home == c) continue;
                    // Donor cluster must keep at least one record of this class.
                    if (count[home][static_cast<std::size_t>(label)] < 2) continue;
                    const double v = sq_dist(std_rows.rows[i], km.centers[c]);
                    if (who < 0 || v < best) {
                        best = v;
                        who = static_cast<std::ptrdiff_t>(i);
                    }
                }
                require(who >= 0, "env_blocks_cv: class-balance repair found no donor");
                km.assignment[static_cast<std::size_t>(who)] = static_cast<int>(c);
                fixed_any = true;
            }
        }
        if (!fixed_any) break;
    }

    FoldPlan plan;
    plan.scheme = Scheme::kEnvironmental;
    plan.seed = seed;
    plan.params = {{"k", k}};
    plan.folds = folds_from_groups(d, km.assignment, k);
    return plan;
}

namespace {

nlohmann::json intervals_json(const TemporalIntervals& intervals) {
    nlohmann::json out = nlohmann::json::array();
    for (const YearRange& r : intervals) out.push_back({r.first, r.last});
    return out;
}

}  // namespace

void validate_intervals(const Dataset& d, const TemporalIntervals& intervals) {
    require(!intervals.empty(), "intervals: empty");
    for (std::size_t t = 0; t < intervals.size(); ++t) {
        require(intervals[t].valid(), "intervals: range " + std::to_string(t) + " is empty");
        if (t > 0) {
            require(intervals[t - 1].last < intervals[t].first,
                    "intervals: must be strictly increasing and non-overlapping");
        }
    }
    for (const Record& r : d.records()) {
        bool covered = false;
        for (const YearRange& iv : intervals) {
            if (iv.contains(r.year)) {
                covered = true;
                break;
            }
        }
        require(covered, "intervals: record year " + std::to_string(r.year) +
                             " is not covered by any interval");
    }
}

FoldPlan spatiotemporal_cv(const Dataset& d, double block_km, std::size_t k_spatial,
                           const TemporalIntervals& intervals, std::uint64_t seed) {
    require(k_spatial >= 2, "spatiotemporal_cv: k_spatial must be >= 2");
    validate_intervals(d, intervals);

    FoldPlan plan;
    plan.scheme = Scheme::kSpatioTemporal;
    plan.seed = seed;
    plan.params = {{"k_spatial", k_spatial},
                   {"block_km", block_km},
                   {"intervals", intervals_json(intervals)}};

    for (std::size_t t = 0; t < intervals.size(); ++t) {
        std::vector<std::int64_t> ids;
        for (const Record& r : d.records()) {
            if (intervals[t].contains(r.year)) ids.push_back(r.id);
        }
        require(!ids.empty(), "spatiotemporal_cv: interval " + std::to_string(t) + " is empty");
        const Dataset sub = d.subset(ids);
        const ClassCounts cc = class_counts(sub);
        require(cc.n_presence > 0 && cc.n_absence > 0,
                "spatiotemporal_cv: interval " + std::to_string(t) + " lacks a class");
        std::vector<Fold> folds;
        try {
            folds = spatial_folds(sub, block_km, k_spatial, mix_seed(seed, t));
        } catch (const Error& e) {
            throw Error("spatiotemporal_cv: interval " + std::to_string(t) + ": " + e.what());
        }
        for (Fold& f : folds) plan.folds.push_back(std::move(f));
    }
    return plan;
}

FoldPlan tss_cv(const Dataset& d, const TemporalIntervals& intervals) {
    require(intervals.size() >= 2, "tss_cv: need at least 2 intervals");
    validate_intervals(d, intervals);

    std::vector<std::vector<std::int64_t>> per_interval(intervals.size());
    for (const Record& r : d.records()) {
        for (std::size_t t = 0; t < intervals.size(); ++t) {
            if (intervals[t].contains(r.year)) {
                per_interval[t].push_back(r.id);
                break;
            }
        }
    }
    for (std::size_t t = 0; t < intervals.size(); ++t) {
        require(!per_interval[t].empty(), "tss_cv: interval " + std::to_string(t) + " is empty");
    }

    FoldPlan plan;
    plan.scheme = Scheme::kTss;
    plan.seed = 0;
    plan.params = {{"intervals", intervals_json(intervals)}};

    std::vector<std::int64_t> train;
    for (std::size_t j = 0; j + 1 < intervals.size(); ++j) {
        train.insert(train.end(), per_interval[j].begin(), per_interval[j].end());
        require(!single_class(d, train),
                "tss_cv: training union through interval " + std::to_string(j) + " lacks a class");
        plan.folds.push_back(make_fold(d, train, per_interval[j + 1]));
    }
    return plan;
}

void FoldPlan::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "FoldPlan::write_csv: cannot open " + path);
    out << body_csv();
}

std::string FoldPlan::body_csv() const {
    std::ostringstream out;
    out << "record_id,fold_index,role\n";
    for (std::size_t j = 0; j < folds.size(); ++j) {
        for (std::int64_t id : folds[j].train_ids) out << id << ',' << j << ",train\n";
        for (std::int64_t id : folds[j].val_ids) out << id << ',' << j << ",val\n";
    }
    return out.str();
}

std::string FoldPlan::header_json() const {
    nlohmann::json header;
    header["scheme"] = to_string(scheme);
    header["seed"] = seed;
    header["params"] = params;
    header["n_folds"] = folds.size();
    nlohmann::json flags = nlohmann::json::array();
    for (std::size_t j = 0; j < folds.size(); ++j) {
        if (folds[j].val_single_class) flags.push_back(j);
    }
    header["single_class_val_folds"] = flags;
    return header.dump(2) + "\n";
}

void FoldPlan::write_json(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "FoldPlan::write_json: cannot open " + path);
    out << header_json();
}

std::string FoldPlan::serialize() const {
    return header_json() + body_csv();
}

}  // namespace spcv
