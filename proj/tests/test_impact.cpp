#include <cmath>
#include <random>

#include "doctest.h"
#include "kanfire/error.hpp"
#include "kanfire/impact.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace kanfire;
using testing::geo;
using testing::mask_from;

namespace {

RasterGrid single_band(std::size_t w, std::size_t h, std::vector<float> values, std::optional<float> nodata = -1.0f,
                       const GridGeoreference& g = geo()) {
    RasterGrid grid(w, h, g, nodata);
    grid.add_band("v", std::move(values));
    return grid;
}

RasterGrid zero_cohorts(std::size_t w, std::size_t h) {
    RasterGrid g(w, h, geo(), -9999.0f);
    for (char sex : {'f', 'm'}) {
        for (int start : kCohortStarts) g.add_band(std::string(1, sex) + "_" + std::to_string(start), 0.0f);
    }
    return g;
}

}  // namespace

TEST_CASE("all burned pixels in one class") {
    const auto m = mask_from({1, 1, 0, 1}, 2, 2);
    const auto classes = single_band(2, 2, {5, 5, 7, 5});
    const auto r = zonal_categorical(m, classes, {{5, "Shrubland"}});
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].class_code == 5);
    CHECK(r.entries[0].class_label == "Shrubland");
    CHECK(r.entries[0].pixels == 3);
    CHECK(r.entries[0].percent == 100.0);
    CHECK(r.other_pixels == 0);
}

TEST_CASE("classes below the threshold fold into Other") {
    // 1000 burned pixels: 758 / 156 / 83 / 3 -> the 0.3 % class folds at threshold 0.5
    std::vector<int> cells(1000, 1);
    std::vector<float> classes(1000);
    for (std::size_t i = 0; i < 1000; ++i) classes[i] = i < 758 ? 52.0f : i < 914 ? 22.0f : i < 997 ? 71.0f : 41.0f;
    const auto m = mask_from(cells, 100, 10);
    const auto g = single_band(100, 10, classes);
    const std::map<std::int64_t, std::string> legend{{52, "Shrub"}, {22, "Developed"}, {71, "Grassland"}};
    const auto r = zonal_categorical(m, g, legend, 0.5);
    REQUIRE(r.entries.size() == 3);
    CHECK(r.entries[0].class_label == "Shrub");
    CHECK(r.entries[0].percent == doctest::Approx(75.8));
    CHECK(r.entries[1].class_label == "Developed");
    CHECK(r.entries[1].percent == doctest::Approx(15.6));
    CHECK(r.other_pixels == 3);
    CHECK(r.percent_sum() == doctest::Approx(100.0));
    // With the default threshold the small class stays and is labelled by code.
    const auto d = zonal_categorical(m, g, legend);
    CHECK(d.entries.size() == 4);
    CHECK(d.entries[3].class_label == "class 41");
}

TEST_CASE("zonal statistics errors") {
    const auto empty = mask_from({0, 0, 0, 0}, 2, 2);
    CHECK_THROWS_AS(zonal_categorical(empty, single_band(2, 2, {1, 1, 1, 1}), {}), InvalidArgument);
    const auto m = mask_from({1, 0, 0, 0}, 2, 2);
    CHECK_THROWS_AS(zonal_categorical(m, single_band(2, 2, {1.5f, 1, 1, 1}), {}), InvalidArgument);
    auto shifted = geo();
    shifted.origin_y += 10;
    CHECK_THROWS_WITH_AS(zonal_categorical(m, single_band(2, 2, {1, 1, 1, 1}, -1.0f, shifted), {}),
                         doctest::Contains("origin_y"), AlignmentError);
}

TEST_CASE("random zonal counts equal a per-pixel scan") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t w = 32, h = 32;
        const auto m = testing::random_mask(rng, w, h, 0.5, 0.05);
        const auto classes = gen::class_grid(rng, w, h, 6, 0.05);
        const auto r = zonal_categorical(m, classes, {}, 0.0);
        const auto expected = oracle::zonal_counts(m, classes);
        std::size_t total = 0;
        for (const auto& [code, n] : expected) total += n;
        CHECK(r.total_pixels == total);
        CHECK(r.entries.size() == expected.size());
        for (const auto& e : r.entries) CHECK(expected.at(e.class_code) == e.pixels);
        CHECK(std::abs(r.percent_sum() - 100.0) <= 0.1);
    }
}

TEST_CASE("population exposure") {
    RasterGrid ones(3, 3, geo(), -9999.0f);
    ones.add_band("pop", 1.0f);
    CHECK(population_exposure(mask_from({1, 1, 0, 0, 1, 0, 0, 0, 1}, 3, 3), ones) == 4.0);
    CHECK(population_exposure(BurnMask::blank(3, 3, geo()), ones) == 0.0);
    RasterGrid neg(3, 3, geo(), -9999.0f);
    neg.add_band("pop", std::vector<float>{1, 1, 1, 1, -2, 1, 1, 1, 1});
    CHECK_THROWS_AS(population_exposure(BurnMask::blank(3, 3, geo()), neg), InvalidArgument);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t w = 1 + rng() % 64, h = 1 + rng() % 64;
        const auto m = testing::random_mask(rng, w, h, 0.4, 0.05);
        const auto pop = gen::population(rng, w, h, 0.1);
        CHECK(oracle::rel_close(population_exposure(m, pop), oracle::masked_sum(m, pop, 0)));
    }
}

TEST_CASE("single burned pixel with equal working-age cohorts") {
    auto g = zero_cohorts(2, 1);
    g.band(*g.band_index("f_25")).values[0] = 10.0f;
    g.band(*g.band_index("m_25")).values[0] = 10.0f;
    g.band(*g.band_index("m_25")).values[1] = 99.0f;  // unburned
    const auto r = demographic_exposure(mask_from({1, 0}, 2, 1), g);
    CHECK(r.total_people == 20.0);
    CHECK(r.female.percent == 50.0);
    CHECK(r.male.percent == 50.0);
    CHECK(r.female.bands[1] == 10.0);
    CHECK(r.male.bands[1] == 10.0);
    CHECK(r.female.band_percent[1] == 100.0);
    CHECK(r.band_percent[1] == 100.0);
}

TEST_CASE("cohort boundaries") {
    CHECK(age_band_of(0) == 0);
    CHECK(age_band_of(1) == 0);
    CHECK(age_band_of(15) == 0);
    CHECK(age_band_of(20) == 1);
    CHECK(age_band_of(55) == 1);
    CHECK(age_band_of(60) == 2);
    CHECK(age_band_of(80) == 2);
}

TEST_CASE("a missing cohort band is named") {
    RasterGrid g(1, 1, geo(), std::nullopt);
    for (int start : kCohortStarts) {
        g.add_band("f_" + std::to_string(start), 1.0f);
        if (start != 35) g.add_band("m_" + std::to_string(start), 1.0f);
    }
    CHECK_THROWS_WITH_AS(demographic_exposure(mask_from({1}, 1, 1), g), doctest::Contains("m_35"), InvalidArgument);
}

TEST_CASE("random cohort grids aggregate like a per-pixel scan") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t w = 1 + rng() % 40, h = 1 + rng() % 40;
        const auto m = testing::random_mask(rng, w, h, 0.5);
        const auto g = gen::age_sex(rng, w, h);
        const auto r = demographic_exposure(m, g);
        const auto expected = oracle::cohort_bands(m, g);
        for (std::size_t b = 0; b < 3; ++b) {
            CHECK(oracle::rel_close(r.female.bands[b], expected[0][b]));
            CHECK(oracle::rel_close(r.male.bands[b], expected[1][b]));
        }
        CHECK(oracle::rel_close(r.female.people + r.male.people, r.total_people, 1e-6));
        CHECK(oracle::rel_close(r.female.bands[0] + r.female.bands[1] + r.female.bands[2], r.female.people, 1e-6));
        CHECK(std::abs(r.female.percent + r.male.percent - 100.0) < 1e-9);
    }
}

TEST_CASE("one agency polygon over every burned pixel") {
    auto f = testing::rect_feature(500000 - 1, 3800000 - 41, 500000 + 41, 3800000 + 1);
    f.attributes["agency"] = std::string("USFS");
    const auto m = mask_from({1, 0, 1, 1, 0, 0, 1, 0, 0, 0, 0, 1, 1, 1, 0, 0}, 4, 4);
    const auto r = jurisdiction_shares(m, {f}, "agency");
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].class_label == "USFS");
    CHECK(r.entries[0].percent == 100.0);
    CHECK(r.other_pixels == 0);

    VectorFeature unlabeled = testing::rect_feature(0, 0, 1, 1);
    CHECK_THROWS_AS(jurisdiction_shares(m, {unlabeled}, "agency"), InvalidArgument);
}

TEST_CASE("random agency polygons match a point-in-polygon scan") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t w = 8 + rng() % 57, h = 8 + rng() % 57;
        const auto m = testing::random_mask(rng, w, h, 0.5);
        if (m.burned_pixels() == 0) continue;
        const auto fs = gen::agencies(rng, w, h, 1 + static_cast<int>(rng() % 6));
        const auto r = jurisdiction_shares(m, fs, "agency", 0.0);
        auto expected = oracle::agency_counts(m, fs, "agency");
        std::size_t residual = expected[""] + expected["Other"];
        expected.erase("");
        expected.erase("Other");
        CHECK(r.other_pixels == residual);
        std::size_t listed = 0;
        for (const auto& [label, n] : expected) listed += n > 0;
        CHECK(r.entries.size() == listed);
        for (const auto& e : r.entries) CHECK(expected.at(e.class_label) == e.pixels);
        CHECK(r.total_pixels == m.burned_pixels());
    }
}

TEST_CASE("building damage rules") {
    // 4x4 grid, origin (500000, 3800000), 10 m. Burned pixel at row 1, col 2.
    std::vector<int> cells(16, 0);
    cells[1 * 4 + 2] = 1;
    const auto m = mask_from(cells, 4, 4);
    const double x0 = 500000, y0 = 3800000;

    SUBCASE("footprint smaller than a pixel with its centroid on a burned pixel") {
        const auto r = building_damage(m, {testing::rect_feature(x0 + 21, y0 - 19, x0 + 23, y0 - 17)});
        CHECK(r.damaged_count == 1);
        CHECK(r.total_in_extent == 1);
    }
    SUBCASE("large footprint covering a burned pixel center") {
        const auto r = building_damage(m, {testing::rect_feature(x0 + 3, y0 - 38, x0 + 30, y0 - 12)});
        CHECK(r.damaged_count == 1);
    }
    SUBCASE("footprint on unburned ground") {
        const auto r = building_damage(m, {testing::rect_feature(x0 + 1, y0 - 39, x0 + 8, y0 - 31)});
        CHECK(r.damaged_count == 0);
        CHECK(r.total_in_extent == 1);
    }
    SUBCASE("footprint outside the grid is excluded from both counts") {
        const auto r = building_damage(m, {testing::rect_feature(x0 + 100, y0, x0 + 110, y0 + 10)});
        CHECK(r.damaged_count == 0);
        CHECK(r.total_in_extent == 0);
    }
}

TEST_CASE("random footprints match the geometric brute force") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t w = 4 + rng() % 40, h = 4 + rng() % 40;
        const auto m = testing::random_mask(rng, w, h, 0.3);
        const auto rects = gen::footprints(rng, w, h, 60);
        const auto r = building_damage(m, gen::as_features(rects));
        const auto [damaged, total] = oracle::building_counts(m, rects);
        CHECK(r.damaged_count == damaged);
        CHECK(r.total_in_extent == total);
        CHECK(r.damaged_count <= r.total_in_extent);
    }
}

TEST_CASE("dasymetric fixtures") {
    RasterGrid coarse(1, 1, geo(0, 20, 20), -9999.0f);
    coarse.add_band("pop", 100.0f);
    RasterGrid fine(2, 2, geo(0, 20, 10), -1.0f);
    fine.add_band("lc", std::vector<float>{21, 42, 42, 22});

    SUBCASE("settled cells share the population") {
        const auto s = dasymetric_refine(coarse, fine, {21, 22});
        CHECK(s.values == std::vector<double>{50, 0, 0, 50});
        CHECK(s.total() == 100.0);
        const auto g = s.to_raster();
        CHECK(g.band(0).values == std::vector<float>{50, 0, 0, 50});
    }
    SUBCASE("no settled cells falls back to an even spread") {
        const auto s = dasymetric_refine(coarse, fine, {99});
        CHECK(s.values == std::vector<double>{25, 25, 25, 25});
    }
    SUBCASE("non-integer ratio") {
        RasterGrid odd(2, 2, geo(0, 20, 7.5), -1.0f);
        odd.add_band("lc", 0.0f);
        CHECK_THROWS_WITH_AS(dasymetric_refine(coarse, odd, {}), doctest::Contains("not an integer"),
                             InvalidArgument);
    }
    SUBCASE("origins must agree") {
        RasterGrid moved(2, 2, geo(5, 20, 10), -1.0f);
        moved.add_band("lc", 0.0f);
        CHECK_THROWS_AS(dasymetric_refine(coarse, moved, {}), AlignmentError);
    }
}

TEST_CASE("dasymetric refinement conserves totals") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t cw = 1 + rng() % 8, ch = 1 + rng() % 8, ratio = 1 + rng() % 10;
        RasterGrid coarse(cw, ch, geo(0, 0, 10.0 * static_cast<double>(ratio)), -9999.0f);
        std::vector<float> pop(cw * ch);
        double total = 0;
        for (auto& p : pop) {
            p = static_cast<float>(u(rng) * 5000);
            total += p;
        }
        coarse.add_band("pop", pop);
        RasterGrid fine(cw * ratio, ch * ratio, geo(0, 0, 10.0), -1.0f);
        std::vector<float> lc(fine.pixel_count());
        for (auto& v : lc) v = u(rng) < 0.1 ? 1.0f : 2.0f;  // sparse settlement, many empty blocks
        fine.add_band("lc", lc);
        const auto s = dasymetric_refine(coarse, fine, {1});
        CHECK(oracle::rel_close(s.total(), total));
    }
}

TEST_CASE("focal statistics") {
    SUBCASE("mean of a constant grid is the constant") {
        RasterGrid g(5, 4, geo(), std::nullopt);
        g.add_band("c", 3.25f);
        const auto r = focal_stat(g, 2, FocalStat::mean);
        for (float v : r.band(0).values) CHECK(v == 3.25f);
    }
    SUBCASE("single one, radius 1, sum gives a 3x3 block") {
        RasterGrid g(5, 5, geo(), std::nullopt);
        std::vector<float> v(25, 0.0f);
        v[12] = 1.0f;
        g.add_band("x", v);
        const auto r = focal_stat(g, 1, FocalStat::sum);
        for (std::size_t row = 0; row < 5; ++row) {
            for (std::size_t col = 0; col < 5; ++col) {
                const bool in_block = row >= 1 && row <= 3 && col >= 1 && col <= 3;
                CHECK(r.at(0, row, col) == (in_block ? 1.0f : 0.0f));
            }
        }
    }
    SUBCASE("radius below one is rejected") {
        RasterGrid g(2, 2, geo(), std::nullopt);
        g.add_band("x", 0.0f);
        CHECK_THROWS_AS(focal_stat(g, 0, FocalStat::sum), InvalidArgument);
    }
    SUBCASE("random grids equal the naive double loop, any thread count") {
        std::mt19937_64 rng(14);
        for (int trial = 0; trial < 10; ++trial) {
            const std::size_t w = 1 + rng() % 64, h = 1 + rng() % 64;
            const auto g = gen::population(rng, w, h, 0.2);
            const int radius = 1 + static_cast<int>(rng() % 3);
            for (bool mean : {false, true}) {
                const auto r = focal_stat(g, radius, mean ? FocalStat::mean : FocalStat::sum, 1 + trial % 3);
                const auto expected = oracle::focal(g, 0, radius, mean);
                for (std::size_t i = 0; i < expected.size(); ++i) {
                    const float got = r.band(0).values[i];
                    if (std::isnan(expected[i])) {
                        CHECK(r.is_nodata(got));
                    } else {
                        CHECK(oracle::rel_close(got, expected[i], 1e-6));
                    }
                }
            }
        }
    }
}
