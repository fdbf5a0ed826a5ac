#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "spatialcv/geo.hpp"
#include "spatialcv/rng.hpp"
#include "spatialcv/splitters.hpp"

using namespace spcv;

namespace {

Dataset random_geodata(std::size_t n, std::uint64_t seed, int year_lo = 2003, int year_hi = 2018,
                       double lon_span = 6.0, double lat_lo = -0.5, double lat_hi = 0.5) {
    Rng rng(seed);
    std::vector<double> lon, lat;
    std::vector<int> year, label;
    std::vector<std::vector<double>> feats;
    for (std::size_t i = 0; i < n; ++i) {
        lon.push_back(rng.uniform(0.0, lon_span));
        lat.push_back(rng.uniform(lat_lo, lat_hi));
        year.push_back(static_cast<int>(rng.uniform_int(year_lo, year_hi)));
        label.push_back(static_cast<int>(rng.below(2)));
        feats.push_back({rng.normal(), rng.normal()});
    }
    // Ensure both classes exist.
    label[0] = 0;
    label[1] = 1;
    return oracle::make_dataset(lon, lat, year, label, feats);
}

void check_plan_invariants(const FoldPlan& plan, const Dataset& d, bool val_partitions) {
    const std::vector<std::int64_t> id_vec = d.ids();
    const std::set<std::int64_t> all_ids(id_vec.begin(), id_vec.end());
    std::set<std::int64_t> seen_val;
    for (const Fold& f : plan.folds) {
        CHECK(!f.train_ids.empty());
        CHECK(!f.val_ids.empty());
        std::vector<std::int64_t> overlap;
        std::set_intersection(f.train_ids.begin(), f.train_ids.end(), f.val_ids.begin(),
                              f.val_ids.end(), std::back_inserter(overlap));
        CHECK(overlap.empty());
        for (std::int64_t id : f.train_ids) CHECK(all_ids.count(id) == 1);
        for (std::int64_t id : f.val_ids) {
            CHECK(all_ids.count(id) == 1);
            if (val_partitions) CHECK(seen_val.insert(id).second);  // pairwise disjoint
        }
    }
}

}  // namespace

TEST_CASE("random_kfold: n=10 k=5 gives val size 2 and train size 8") {
    const Dataset d = random_geodata(10, 1);
    const FoldPlan plan = random_kfold(d, 5, 42);
    REQUIRE(plan.folds.size() == 5);
    std::set<std::int64_t> covered;
    for (const Fold& f : plan.folds) {
        CHECK(f.val_ids.size() == 2);
        CHECK(f.train_ids.size() == 8);
        covered.insert(f.val_ids.begin(), f.val_ids.end());
    }
    CHECK(covered.size() == 10);
    check_plan_invariants(plan, d, true);
}

TEST_CASE("random_kfold: val sizes differ by at most one") {
    const Dataset d = random_geodata(23, 2);
    const FoldPlan plan = random_kfold(d, 5, 1);
    std::size_t lo = 23, hi = 0;
    for (const Fold& f : plan.folds) {
        lo = std::min(lo, f.val_ids.size());
        hi = std::max(hi, f.val_ids.size());
    }
    CHECK(hi - lo <= 1);
}

TEST_CASE("random_kfold rejects k > n") {
    const Dataset d = random_geodata(4, 3);
    CHECK_THROWS_AS(random_kfold(d, 5, 0), Error);
}

TEST_CASE("spatial_blocks_cv: forced separation of far clusters") {
    // Two tight clusters 800 km apart; with 400 km blocks they cannot share
    // a fold's validation set with each other.
    std::vector<double> lon, lat;
    std::vector<int> year, label;
    Rng rng(5);
    for (int i = 0; i < 12; ++i) {
        const bool west = i % 2 == 0;
        lon.push_back((west ? 0.0 : 7.2) + rng.uniform(0.0, 0.05));
        lat.push_back(rng.uniform(-0.05, 0.05));
        year.push_back(2000);
        label.push_back(i % 3 == 0 ? 1 : 0);
    }
    const Dataset d = oracle::make_dataset(lon, lat, year, label, {});
    const FoldPlan plan = spatial_blocks_cv(d, 400.0, 2, 9);
    REQUIRE(plan.folds.size() == 2);
    check_plan_invariants(plan, d, true);
    // Each val fold must be one of the clusters, whole.
    for (const Fold& f : plan.folds) {
        bool all_west = true, all_east = true;
        for (std::int64_t id : f.val_ids) {
            const Record& r = d.record(d.index_of(id));
            (r.lon < 3.0 ? all_east : all_west) = false;
        }
        CHECK((all_west || all_east));
    }
}

TEST_CASE("spatial_blocks_cv rejects fewer blocks than folds") {
    const Dataset d = random_geodata(20, 6, 2003, 2018, 0.02, -0.01, 0.01);  // tiny extent
    CHECK_THROWS_WITH_AS(spatial_blocks_cv(d, 5000.0, 3, 0), doctest::Contains("fewer"), Error);
}

TEST_CASE("spatial_blocks_cv: non-adjacent train/val pairs are separated by block_km") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dataset d = random_geodata(60, 100 + seed);
        const double block = 120.0;
        const FoldPlan plan = spatial_blocks_cv(d, block, 3, seed);
        const BlockAssignment blocks = assign_grid_blocks(d, block, seed);
        check_plan_invariants(plan, d, true);
        for (const Fold& f : plan.folds) {
            for (std::int64_t tid : f.train_ids) {
                for (std::int64_t vid : f.val_ids) {
                    const std::size_t ti = d.index_of(tid), vi = d.index_of(vid);
                    const auto [tx, ty] = blocks.block_cells[static_cast<std::size_t>(blocks.block_id[ti])];
                    const auto [vx, vy] = blocks.block_cells[static_cast<std::size_t>(blocks.block_id[vi])];
                    if (std::abs(tx - vx) <= 1 && std::abs(ty - vy) <= 1) continue;
                    const Record& a = d.record(ti);
                    const Record& b = d.record(vi);
                    CHECK(haversine_km(a.lon, a.lat, b.lon, b.lat) >= block);
                }
            }
        }
    }
}

TEST_CASE("env_blocks_cv: separated feature blobs become the clusters") {
    std::vector<double> lon, lat;
    std::vector<int> year, label;
    std::vector<std::vector<double>> feats;
    Rng rng(11);
    for (int i = 0; i < 40; ++i) {
        lon.push_back(rng.uniform(0, 1));
        lat.push_back(rng.uniform(0, 1));
        year.push_back(2000);
        label.push_back(i % 2);
        const double center = i < 20 ? 0.0 : 50.0;
        feats.push_back({center + rng.normal(), center + rng.normal()});
    }
    const Dataset d = oracle::make_dataset(lon, lat, year, label, feats);
    const FoldPlan plan = env_blocks_cv(d, 2, 3);
    REQUIRE(plan.folds.size() == 2);
    check_plan_invariants(plan, d, true);
    for (const Fold& f : plan.folds) {
        // Blob membership of every val record agrees with the first one.
        const bool first_low = d.record(d.index_of(f.val_ids[0])).features[0] < 25.0;
        CHECK(f.val_ids.size() == 20);
        for (std::int64_t id : f.val_ids) {
            CHECK((d.record(d.index_of(id)).features[0] < 25.0) == first_low);
        }
    }
}

TEST_CASE("env_blocks_cv: every cluster holds both classes after repair") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Dataset d = random_geodata(50 + seed, 200 + seed);
        const FoldPlan plan = env_blocks_cv(d, 3, seed);
        check_plan_invariants(plan, d, true);
        for (const Fold& f : plan.folds) {
            bool has0 = false, has1 = false;
            for (std::int64_t id : f.val_ids) {
                (d.record(d.index_of(id)).label == 1 ? has1 : has0) = true;
            }
            CHECK(has0);
            CHECK(has1);
            CHECK_FALSE(f.val_single_class);
        }
    }
}

TEST_CASE("env_blocks_cv: a nearby presence is pulled into a pure-absence cluster") {
    std::vector<double> lon, lat;
    std::vector<int> year, label;
    std::vector<std::vector<double>> feats;
    // Blob A: 10 absences around feature 0; one presence at 1.0 nearby.
    // Blob B: far away, mixed classes.
    for (int i = 0; i < 10; ++i) {
        lon.push_back(0.01 * i);
        lat.push_back(0.0);
        year.push_back(2000);
        label.push_back(0);
        feats.push_back({0.0 + 0.01 * i});
    }
    lon.push_back(0.5);
    lat.push_back(0.0);
    year.push_back(2000);
    label.push_back(1);
    feats.push_back({1.0});
    for (int i = 0; i < 10; ++i) {
        lon.push_back(1.0 + 0.01 * i);
        lat.push_back(0.0);
        year.push_back(2000);
        label.push_back(i % 2);
        feats.push_back({100.0 + 0.01 * i});
    }
    const Dataset d = oracle::make_dataset(lon, lat, year, label, feats);
    const FoldPlan plan = env_blocks_cv(d, 2, 0);
    for (const Fold& f : plan.folds) {
        std::size_t pres = 0;
        for (std::int64_t id : f.val_ids) pres += d.record(d.index_of(id)).label;
        CHECK(pres >= 1);
        CHECK(pres < f.val_ids.size());
    }
}

TEST_CASE("env_blocks_cv rejects a class smaller than k") {
    std::vector<double> lon{0, 1, 2, 3, 4}, lat{0, 0, 0, 0, 0};
    std::vector<int> year(5, 2000), label{1, 0, 0, 0, 0};
    std::vector<std::vector<double>> feats{{0}, {1}, {2}, {3}, {4}};
    const Dataset d = oracle::make_dataset(lon, lat, year, label, feats);
    CHECK_THROWS_AS(env_blocks_cv(d, 2, 0), Error);
}

TEST_CASE("spatiotemporal_cv: fold count is k_spatial x intervals, ordered") {
    const TemporalIntervals plant = {{2003, 2006}, {2007, 2010}, {2011, 2014}, {2015, 2018}};
    const Dataset d = random_geodata(400, 21);
    const FoldPlan plan = spatiotemporal_cv(d, 150.0, 5, plant, 77);
    CHECK(plan.folds.size() == 20);
    check_plan_invariants(plan, d, false);

    // Interval containment: every fold's train and val years share one interval.
    for (std::size_t j = 0; j < plan.folds.size(); ++j) {
        const std::size_t interval = j / 5;
        const YearRange iv = plant[interval];
        for (std::int64_t id : plan.folds[j].train_ids) {
            CHECK(iv.contains(d.record(d.index_of(id)).year));
        }
        for (std::int64_t id : plan.folds[j].val_ids) {
            CHECK(iv.contains(d.record(d.index_of(id)).year));
        }
    }
}

TEST_CASE("spatiotemporal_cv: fish-shaped configuration gives 9 folds") {
    const TemporalIntervals fish = {{2005, 2008}, {2009, 2010}, {2011, 2012}};
    const Dataset d = random_geodata(300, 22, 2005, 2012);
    const FoldPlan plan = spatiotemporal_cv(d, 150.0, 3, fish, 5);
    CHECK(plan.folds.size() == 9);
}

TEST_CASE("spatiotemporal_cv with one interval collapses to spatial blocks") {
    const Dataset d = random_geodata(80, 23, 2005, 2005);
    const TemporalIntervals one = {{2005, 2005}};
    const FoldPlan spt = spatiotemporal_cv(d, 150.0, 3, one, 4);
    const FoldPlan sp = spatial_blocks_cv(d, 150.0, 3, mix_seed(4, 0));
    REQUIRE(spt.folds.size() == sp.folds.size());
    for (std::size_t j = 0; j < sp.folds.size(); ++j) {
        CHECK(spt.folds[j].val_ids == sp.folds[j].val_ids);
        CHECK(spt.folds[j].train_ids == sp.folds[j].train_ids);
    }
}

TEST_CASE("spatiotemporal_cv rejects an interval lacking a class") {
    std::vector<double> lon{0, 1, 2, 3}, lat{0, 0, 0, 0};
    std::vector<int> year{2005, 2005, 2010, 2010}, label{0, 0, 0, 1};
    const Dataset d = oracle::make_dataset(lon, lat, year, label, {});
    CHECK_THROWS_AS(spatiotemporal_cv(d, 50.0, 2, {{2005, 2005}, {2010, 2010}}, 0), Error);
}

TEST_CASE("tss_cv: T=4 builds three chronological expanding folds") {
    const TemporalIntervals plant = {{2003, 2006}, {2007, 2010}, {2011, 2014}, {2015, 2018}};
    const Dataset d = random_geodata(200, 31);
    const FoldPlan plan = tss_cv(d, plant);
    REQUIRE(plan.folds.size() == 3);
    check_plan_invariants(plan, d, true);

    auto ids_in = [&](std::size_t upto) {
        std::vector<std::int64_t> out;
        for (const Record& r : d.records()) {
            for (std::size_t t = 0; t <= upto; ++t) {
                if (plant[t].contains(r.year)) {
                    out.push_back(r.id);
                    break;
                }
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    CHECK(plan.folds[0].train_ids == ids_in(0));
    CHECK(plan.folds[1].train_ids == ids_in(1));
    CHECK(plan.folds[2].train_ids == ids_in(2));

    // Strict forward chaining: max train year < min val year.
    for (const Fold& f : plan.folds) {
        int max_train = -99999, min_val = 99999;
        for (std::int64_t id : f.train_ids) {
            max_train = std::max(max_train, d.record(d.index_of(id)).year);
        }
        for (std::int64_t id : f.val_ids) {
            min_val = std::min(min_val, d.record(d.index_of(id)).year);
        }
        CHECK(max_train < min_val);
    }
}

TEST_CASE("tss_cv: T=2 gives a single fold whose train set is interval one") {
    const Dataset d = random_geodata(60, 32, 2000, 2009);
    const FoldPlan plan = tss_cv(d, {{2000, 2004}, {2005, 2009}});
    REQUIRE(plan.folds.size() == 1);
    for (std::int64_t id : plan.last_fold().train_ids) {
        CHECK(d.record(d.index_of(id)).year <= 2004);
    }
}

TEST_CASE("tss_cv rejects uncovered years and overlapping intervals") {
    const Dataset d = random_geodata(60, 33, 2000, 2010);
    CHECK_THROWS_AS(tss_cv(d, {{2000, 2004}, {2005, 2008}}), Error);  // 2009-2010 uncovered
    CHECK_THROWS_AS(tss_cv(d, {{2000, 2006}, {2005, 2010}}), Error);  // overlap
}

TEST_CASE("all splitters are byte-for-byte deterministic under a fixed seed") {
    const TemporalIntervals iv = {{2003, 2006}, {2007, 2010}, {2011, 2014}, {2015, 2018}};
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dataset d = random_geodata(120, 500 + seed);
        CHECK(random_kfold(d, 4, seed).serialize() == random_kfold(d, 4, seed).serialize());
        CHECK(spatial_blocks_cv(d, 150.0, 3, seed).serialize() ==
              spatial_blocks_cv(d, 150.0, 3, seed).serialize());
        CHECK(env_blocks_cv(d, 3, seed).serialize() == env_blocks_cv(d, 3, seed).serialize());
        CHECK(spatiotemporal_cv(d, 200.0, 2, iv, seed).serialize() ==
              spatiotemporal_cv(d, 200.0, 2, iv, seed).serialize());
        CHECK(tss_cv(d, iv).serialize() == tss_cv(d, iv).serialize());
    }
}

TEST_CASE("single-class validation folds are flagged, not dropped") {
    // Hand-built: years 2000 (mixed) and 2001 (all absence).
    std::vector<double> lon{0, 1, 2, 3, 4, 5}, lat{0, 0, 0, 0, 0, 0};
    std::vector<int> year{2000, 2000, 2000, 2000, 2001, 2001};
    std::vector<int> label{1, 0, 1, 0, 0, 0};
    const Dataset d = oracle::make_dataset(lon, lat, year, label, {});
    const FoldPlan plan = tss_cv(d, {{2000, 2000}, {2001, 2001}});
    REQUIRE(plan.folds.size() == 1);
    CHECK(plan.folds[0].val_single_class);
}
