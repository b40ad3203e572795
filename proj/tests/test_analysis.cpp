#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gdcnn/analysis.hpp"
#include "gdcnn/rng.hpp"

using namespace gdcnn;

namespace {

Heatmap constant_map(float v) {
    Heatmap hm;
    hm.width = hm.height = 137;
    hm.values.assign(137 * 137, v);
    return hm;
}

}  // namespace

TEST_CASE("metrics reproduce the reference confusion rows at 3-decimal precision") {
    // published two-class benchmark rows used as frozen fixtures
    SUBCASE("male row") {
        const MetricsReport m = metrics({1455, 30, 45, 1470});
        REQUIRE(m.accuracy);
        REQUIRE(m.precision);
        REQUIRE(m.recall);
        REQUIRE(m.f1);
        CHECK(*m.accuracy == doctest::Approx(2925.0 / 3000.0).epsilon(1e-12));
        CHECK(*m.precision == doctest::Approx(1455.0 / 1485.0).epsilon(1e-12));
        CHECK(*m.recall == doctest::Approx(0.97).epsilon(1e-12));

        CHECK(std::abs(*m.accuracy - 0.975) <= 0.001);
        CHECK(std::abs(*m.precision - 0.979) <= 0.001);
        CHECK(std::abs(*m.recall - 0.970) <= 0.001);
        // the printed F1 (0.974) came from a truncated P/R chain; at report
        // precision the harmonic form lands within one last digit of it
        CHECK(round3(*m.f1) == "0.975");
        CHECK(std::abs(std::stod(round3(*m.f1)) - 0.974) <= 0.001 + 1e-12);
    }

    SUBCASE("female row") {
        const MetricsReport m = metrics({1467, 47, 33, 1453});
        CHECK(std::abs(*m.accuracy - 0.973) <= 0.001);
        CHECK(std::abs(*m.precision - 0.968) <= 0.001);
        CHECK(std::abs(*m.recall - 0.978) <= 0.001);
        CHECK(*m.f1 == doctest::Approx(2934.0 / 3014.0).epsilon(1e-9));
        CHECK(std::abs(std::stod(round3(*m.f1)) - 0.972) <= 0.001 + 1e-12);
    }

    SUBCASE("the printed-formula F1 variant does not fit those rows") {
        const MetricsReport m = metrics({1455, 30, 45, 1470});
        const double literal = f1_precision_over_sum(*m.precision, *m.recall);
        CHECK(literal == doctest::Approx(0.5025).epsilon(1e-3));
        CHECK(std::abs(literal - 0.974) > 0.4);  // nowhere near the published value
    }
}

TEST_CASE("metrics degenerate handling") {
    SUBCASE("zero positive predictions leave precision undefined") {
        const MetricsReport m = metrics({0, 0, 5, 5});
        REQUIRE(m.accuracy);
        CHECK(*m.accuracy == doctest::Approx(0.5));
        REQUIRE(m.recall);
        CHECK(*m.recall == 0.0);
        CHECK(!m.precision.has_value());
        CHECK(!m.f1.has_value());
    }

    SUBCASE("all-zero counts rejected") {
        CHECK_THROWS_AS(metrics({0, 0, 0, 0}), std::invalid_argument);
    }

    SUBCASE("negative counts rejected") {
        CHECK_THROWS_AS(metrics({-1, 0, 0, 5}), std::invalid_argument);
    }
}

TEST_CASE("metrics properties") {
    Rng rng(1);

    SUBCASE("scale invariance") {
        for (int trial = 0; trial < 50; ++trial) {
            ConfusionCounts c{static_cast<long long>(rng.below(50) + 1),
                              static_cast<long long>(rng.below(50)),
                              static_cast<long long>(rng.below(50)),
                              static_cast<long long>(rng.below(50) + 1)};
            const long long k = 1 + static_cast<long long>(rng.below(9));
            const ConfusionCounts scaled{c.tp * k, c.fp * k, c.fn * k, c.tn * k};
            const MetricsReport a = metrics(c);
            const MetricsReport b = metrics(scaled);
            CHECK(*a.accuracy == doctest::Approx(*b.accuracy).epsilon(1e-12));
            CHECK(*a.precision == doctest::Approx(*b.precision).epsilon(1e-12));
            CHECK(*a.recall == doctest::Approx(*b.recall).epsilon(1e-12));
            CHECK(*a.f1 == doctest::Approx(*b.f1).epsilon(1e-12));
        }
    }

    SUBCASE("f1 lies between precision and recall") {
        for (int trial = 0; trial < 100; ++trial) {
            ConfusionCounts c{static_cast<long long>(rng.below(100) + 1),
                              static_cast<long long>(rng.below(100)),
                              static_cast<long long>(rng.below(100)),
                              static_cast<long long>(rng.below(100))};
            const MetricsReport m = metrics(c);
            if (m.precision && m.recall && m.f1 && *m.precision > 0 && *m.recall > 0) {
                CHECK(*m.f1 >= std::min(*m.precision, *m.recall) - 1e-12);
                CHECK(*m.f1 <= std::max(*m.precision, *m.recall) + 1e-12);
            }
        }
    }
}

TEST_CASE("attention regions") {
    const RegionBands bands;

    SUBCASE("all-ones heatmap attends all five regions") {
        const auto r = attention_regions(constant_map(1.0f), bands);
        CHECK(r.size() == 5);
    }

    SUBCASE("all-zeros heatmap attends nothing") {
        const auto r = attention_regions(constant_map(0.0f), bands);
        CHECK(r.empty());
    }

    SUBCASE("bottom-left block attends exactly the radius") {
        Heatmap hm = constant_map(0.0f);
        for (int y = 0; y < 137; ++y) {
            for (int x = 0; x < 137; ++x) {
                if (y >= 0.85 * 137 && x < 0.5 * 137) {
                    hm.values[static_cast<std::size_t>(y) * 137 + x] = 1.0f;
                }
            }
        }
        const auto r = attention_regions(hm, bands);
        REQUIRE(r.size() == 1);
        CHECK(r.count(Region::radius) == 1);
    }

    SUBCASE("mirror flag swaps radius and ulna") {
        Heatmap hm = constant_map(0.0f);
        for (int y = 120; y < 137; ++y) {
            for (int x = 0; x < 60; ++x) hm.values[static_cast<std::size_t>(y) * 137 + x] = 1.0f;
        }
        RegionBands mirrored = bands;
        mirrored.mirrored = true;
        const auto r = attention_regions(hm, mirrored);
        REQUIRE(r.size() == 1);
        CHECK(r.count(Region::ulna) == 1);
    }

    SUBCASE("raising tau never adds a region") {
        Rng rng(9);
        for (int trial = 0; trial < 30; ++trial) {
            Heatmap hm = constant_map(0.0f);
            for (auto& v : hm.values) v = static_cast<float>(rng.uniform());
            RegionBands lo = bands, hi = bands;
            lo.tau = 0.3f;
            hi.tau = 0.7f;
            const auto rl = attention_regions(hm, lo);
            const auto rh = attention_regions(hm, hi);
            for (Region reg : rh) CHECK(rl.count(reg) == 1);
        }
    }

    SUBCASE("invalid bands rejected") {
        RegionBands bad = bands;
        bad.metacarpals_end = 0.3f;  // below phalanges_end
        CHECK_THROWS_AS(attention_regions(constant_map(1.0f), bad), std::invalid_argument);
        RegionBands bad_tau = bands;
        bad_tau.tau = 0.0f;
        CHECK_THROWS_AS(attention_regions(constant_map(1.0f), bad_tau), std::invalid_argument);
    }
}

TEST_CASE("aggregate attention") {
    const RegionBands bands;

    SUBCASE("a single all-ones heatmap counts once everywhere") {
        const std::vector<Heatmap> maps{constant_map(1.0f)};
        const AttentionHistogram h = aggregate_attention(maps, bands);
        CHECK(h.images == 1);
        for (int c : h.region_counts) CHECK(c == 1);
        CHECK(h.carpals_radius == 1);
        CHECK(h.ulna_carpals_radius == 1);
        CHECK(h.ulna_carpals_radius_metacarpals == 1);
        CHECK(h.all_regions == 1);
    }

    SUBCASE("radius-only heatmaps count for radius but no combination") {
        std::vector<std::set<Region>> sets(5, std::set<Region>{Region::radius});
        const AttentionHistogram h = aggregate_attention_sets(sets);
        CHECK(h.region_counts[static_cast<std::size_t>(Region::radius)] == 5);
        CHECK(h.region_counts[static_cast<std::size_t>(Region::carpals)] == 0);
        CHECK(h.carpals_radius == 0);
        CHECK(h.ulna_carpals_radius == 0);
        CHECK(h.all_regions == 0);
    }

    SUBCASE("combination counts never exceed their member region counts") {
        Rng rng(12);
        std::vector<std::set<Region>> sets;
        for (int i = 0; i < 200; ++i) {
            std::set<Region> s;
            for (int r = 0; r < 5; ++r) {
                if (rng.uniform() < 0.5) s.insert(static_cast<Region>(r));
            }
            sets.push_back(std::move(s));
        }
        const AttentionHistogram h = aggregate_attention_sets(sets);
        for (int c : h.region_counts) CHECK(c <= h.images);
        const int carpals = h.region_counts[static_cast<std::size_t>(Region::carpals)];
        const int radius = h.region_counts[static_cast<std::size_t>(Region::radius)];
        const int ulna = h.region_counts[static_cast<std::size_t>(Region::ulna)];
        CHECK(h.carpals_radius <= std::min(carpals, radius));
        CHECK(h.ulna_carpals_radius <= std::min({ulna, carpals, radius}));
        CHECK(h.ulna_carpals_radius_metacarpals <= h.ulna_carpals_radius);
        CHECK(h.all_regions <= h.ulna_carpals_radius_metacarpals);
    }

    SUBCASE("empty input rejected") {
        CHECK_THROWS_AS(aggregate_attention_sets({}), std::invalid_argument);
    }

    SUBCASE("report renders fixed rows") {
        std::vector<std::set<Region>> sets{{Region::carpals, Region::radius}};
        const std::string report = attention_report(aggregate_attention_sets(sets));
        CHECK(report.find("region,count\n") == 0);
        CHECK(report.find("carpals,1\n") != std::string::npos);
        CHECK(report.find("carpals+radius,1\n") != std::string::npos);
        CHECK(report.find("ulna+carpals+radius,0\n") != std::string::npos);
        CHECK(report.find("all,0\n") != std::string::npos);
    }
}

TEST_CASE("report_table") {
    SUBCASE("male fixture row renders with 3-decimal cells") {
        const std::string t = report_table({{"Male", {1455, 30, 45, 1470}}});
        CHECK(t == "class,tp,fp,fn,tn,accuracy,precision,recall,f1\n"
                   "Male,1455,30,45,1470,0.975,0.980,0.970,0.975\n");
    }

    SUBCASE("female fixture row") {
        const std::string t = report_table({{"Female", {1467, 47, 33, 1453}}});
        CHECK(t == "class,tp,fp,fn,tn,accuracy,precision,recall,f1\n"
                   "Female,1467,47,33,1453,0.973,0.969,0.978,0.973\n");
    }

    SUBCASE("undefined metrics print the marker") {
        const std::string t = report_table({{"x", {0, 0, 5, 5}}});
        CHECK(t.find("undef") != std::string::npos);
        CHECK(t.find("0.500") != std::string::npos);
    }

    SUBCASE("empty class name rejected") {
        CHECK_THROWS_AS(report_table({{"", {1, 0, 0, 1}}}), std::invalid_argument);
    }

    SUBCASE("rounding is half away from zero, not banker's") {
        // 1/16 = 0.0625 exactly; half-away gives 0.063, round-half-even 0.062
        const MetricsReport m = metrics({1, 15, 0, 0});
        REQUIRE(m.precision);
        CHECK(*m.precision == 0.0625);
        CHECK(round3(*m.precision) == "0.063");
        CHECK(round3(-0.0625) == "-0.063");
        CHECK(round3(0.97350001) == "0.974");
        CHECK(round3(2925.0 / 3000.0) == "0.975");
        CHECK(round3(1455.0 / 1485.0) == "0.980");
    }
}
