#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "spatialcv/rng.hpp"
#include "spatialcv/smote.hpp"

using namespace spcv;

namespace {

Dataset imbalanced_dataset(std::size_t n_pres, std::size_t n_abs, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> lon, lat;
    std::vector<int> year, label;
    std::vector<std::vector<double>> feats;
    for (std::size_t i = 0; i < n_pres + n_abs; ++i) {
        lon.push_back(rng.uniform(0, 5));
        lat.push_back(rng.uniform(40, 45));
        year.push_back(2005);
        label.push_back(i < n_pres ? 1 : 0);
        feats.push_back({rng.normal(), 10.0 * rng.normal(), rng.uniform(100, 200)});
    }
    return oracle::make_dataset(lon, lat, year, label, feats);
}

}  // namespace

TEST_CASE("smote 10/90 at 30% target synthesizes exactly 29 presences") {
    const Dataset d = imbalanced_dataset(10, 90, 1);
    const TrainTable t = smote(d, d.ids(), SmoteConfig{0.30, 5, 7});
    CHECK(t.n_synthetic == 29);
    CHECK(t.features.size() == 129);
    std::size_t pres = 0;
    for (int y : t.labels) pres += static_cast<std::size_t>(y);
    CHECK(pres == 39);
    const double ratio = static_cast<double>(pres) / static_cast<double>(t.labels.size());
    CHECK(ratio == doctest::Approx(39.0 / 129.0).epsilon(1e-12));
    CHECK(ratio >= 0.30);
}

TEST_CASE("smote is a no-op when the target is already met") {
    const Dataset d = imbalanced_dataset(40, 60, 2);
    const TrainTable t = smote(d, d.ids(), SmoteConfig{0.30, 5, 7});
    CHECK(t.no_op);
    CHECK(t.n_synthetic == 0);
    CHECK(t.features.size() == 100);
    CHECK(!t.notice.empty());
}

TEST_CASE("smote requires at least two presence records") {
    const Dataset d = imbalanced_dataset(1, 50, 3);
    CHECK_THROWS_AS(smote(d, d.ids(), SmoteConfig{0.30, 5, 7}), Error);
}

TEST_CASE("smote contract on random instances") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(900 + seed);
        const std::size_t n_pres = 3 + rng.below(12);
        const std::size_t n_abs = 40 + rng.below(80);
        const Dataset d = imbalanced_dataset(n_pres, n_abs, 50 + seed);
        const SmoteConfig cfg{0.30, 5, seed};
        const TrainTable t = smote(d, d.ids(), cfg);

        // Originals all present exactly once, in canonical id order.
        const std::size_t n_orig = n_pres + n_abs;
        REQUIRE(t.features.size() == n_orig + t.n_synthetic);
        for (std::size_t i = 0; i < n_orig; ++i) {
            const Record& r = d.record(d.index_of(t.source_ids[i]));
            CHECK(t.features[i] == r.features);
            CHECK(t.labels[i] == r.label);
        }

        // Post-hoc presence ratio within [target, target + 1/n_total).
        std::size_t pres = 0;
        for (int y : t.labels) pres += static_cast<std::size_t>(y);
        const double ratio = static_cast<double>(pres) / static_cast<double>(t.labels.size());
        CHECK(ratio >= 0.30);
        CHECK(ratio < 0.30 + 1.0 / static_cast<double>(t.labels.size()));

        // Synthetic rows: label 1, no id, and each coordinate between some
        // pair of original presence vectors (segment membership).
        std::vector<std::vector<double>> pres_rows;
        for (std::size_t i = 0; i < n_orig; ++i) {
            if (t.labels[i] == 1) pres_rows.push_back(t.features[i]);
        }
        for (std::size_t s = n_orig; s < t.features.size(); ++s) {
            CHECK(t.labels[s] == 1);
            CHECK(t.source_ids[s] == TrainTable::kSyntheticId);
            bool on_segment = false;
            for (std::size_t a = 0; a < pres_rows.size() && !on_segment; ++a) {
                for (std::size_t b = 0; b < pres_rows.size() && !on_segment; ++b) {
                    if (a == b) continue;
                    // Recover u from the first differing coordinate, then
                    // verify every coordinate against it.
                    double u = -1.0;
                    bool ok = true;
                    for (std::size_t f = 0; f < t.features[s].size() && ok; ++f) {
                        const double base = pres_rows[a][f];
                        const double span = pres_rows[b][f] - base;
                        if (std::abs(span) < 1e-30) {
                            ok = std::abs(t.features[s][f] - base) <= 1e-9;
                            continue;
                        }
                        const double cand = (t.features[s][f] - base) / span;
                        if (u < 0.0) u = cand;
                        ok = std::abs(cand - u) <= 1e-9 && u >= -1e-9 && u <= 1.0 + 1e-9;
                    }
                    on_segment = ok && u >= -1e-9;
                }
            }
            CHECK(on_segment);
        }

        // Determinism under the seed.
        const TrainTable t2 = smote(d, d.ids(), cfg);
        CHECK(t.features == t2.features);
        CHECK(t.labels == t2.labels);
    }
}

TEST_CASE("smote clamps k_neighbors to the presence count minus one") {
    const Dataset d = imbalanced_dataset(3, 50, 4);
    const TrainTable t = smote(d, d.ids(), SmoteConfig{0.30, 25, 7});
    CHECK(t.n_synthetic > 0);  // would throw if the clamp were missing
}

TEST_CASE("materialize_train sorts ids ascending") {
    const Dataset d = imbalanced_dataset(5, 5, 5);
    std::vector<std::int64_t> shuffled = {7, 2, 9, 0, 4};
    const TrainTable t = materialize_train(d, shuffled);
    CHECK(t.source_ids == std::vector<std::int64_t>{0, 2, 4, 7, 9});
    CHECK(t.features[0] == d.record(d.index_of(0)).features);
}
