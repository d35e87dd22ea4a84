#include <doctest.h>

#include <cmath>
#include <random>

#include "mobepi/spatial_stats.hpp"

using namespace mobepi;
using namespace mobepi::stats;

namespace {

const LatLon kSw{22.5, 88.3};

geo::AdjacencyMatrix dense(std::vector<std::vector<double>> rows) {
    geo::AdjacencyMatrix m;
    for (std::size_t i = 0; i < rows.size(); ++i) m.ids.push_back("r" + std::to_string(i));
    for (auto& r : rows) m.w.insert(m.w.end(), r.begin(), r.end());
    return m;
}

// Straight from the definition, no shared code with the library.
double naive(const std::vector<double>& v, const geo::AdjacencyMatrix& w) {
    const std::size_t n = v.size();
    long double mean = 0;
    for (double x : v) mean += x;
    mean /= n;
    long double num = 0, den = 0, sw = 0;
    for (std::size_t a = 0; a < n; ++a) {
        den += (v[a] - mean) * (v[a] - mean);
        for (std::size_t b = 0; b < n; ++b) {
            num += w.w[a * n + b] * (v[a] - mean) * (v[b] - mean);
            sw += w.w[a * n + b];
        }
    }
    if (den == 0) return 0.0;
    return static_cast<double>((n / sw) * num / den);
}

}  // namespace

TEST_CASE("moran examples") {
    const auto regions = geo::build_grid(geo::bbox_from_meters(kSw, 2000, 2000), 1000);
    const auto rook = geo::adjacency_matrix(regions, geo::AdjacencyMetric::shared_border);
    // Row-major 2x2: (0,0) (0,1) (1,0) (1,1).
    CHECK(moran_sc(std::vector<double>{1, -1, -1, 1}, rook) == doctest::Approx(-1.0));
    CHECK(moran_sc(std::vector<double>{4, 4, 4, 4}, rook) == 0.0);
    const auto line = dense({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}});
    CHECK(moran_sc(std::vector<double>{1, 2, 3}, line) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("moran errors") {
    const auto none = dense({{0, 0}, {0, 0}});
    CHECK_THROWS_AS(moran_sc(std::vector<double>{1, 2}, none), Error);
    const auto pair = dense({{0, 1}, {1, 0}});
    CHECK_THROWS_AS(moran_sc(std::vector<double>{1, 2, 3}, pair), Error);
}

TEST_CASE("moran matches the naive double loop; invariances hold") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> nd(0, 1);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 3 + rng() % 30;
        std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0));
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                if (rng() % 3 == 0) rows[a][b] = rows[b][a] = 1;
        rows[0][1] = rows[1][0] = 1;
        const auto w = dense(rows);
        std::vector<double> v(n);
        for (auto& x : v) x = nd(rng);
        const double ref = naive(v, w);
        CHECK(std::abs(moran_sc(v, w) - ref) <= 1e-12);
        CHECK(std::abs(moran_sc_serial(v, w) - ref) <= 1e-12);
        auto shifted = v, scaled = v;
        for (auto& x : shifted) x += 17.25;
        for (auto& x : scaled) x *= -3.5;
        CHECK(std::abs(moran_sc(shifted, w) - ref) <= 1e-12);
        CHECK(std::abs(moran_sc(scaled, w) - ref) <= 1e-12);
    }
}

TEST_CASE("parallel kernel agrees with the serial one on a large grid") {
    const auto regions = geo::build_grid(geo::bbox_from_meters(kSw, 20000, 20000), 1000);
    const auto rook = geo::adjacency_matrix(regions, geo::AdjacencyMetric::shared_border);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd(0, 1);
    std::vector<double> v(regions.size());
    for (auto& x : v) x = nd(rng);
    CHECK(std::abs(moran_sc(v, rook) - moran_sc_serial(v, rook)) <= 1e-12);
}

TEST_CASE("moran null mean on a 10x10 rook grid") {
    const auto regions = geo::build_grid(geo::bbox_from_meters(kSw, 10000, 10000), 1000);
    const auto rook = geo::adjacency_matrix(regions, geo::AdjacencyMetric::shared_border);
    double sum = 0;
    for (int seed = 0; seed < 500; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        std::normal_distribution<double> nd(0, 1);
        std::vector<double> v(100);
        for (auto& x : v) x = nd(rng);
        sum += moran_sc(v, rook);
    }
    CHECK(std::abs(sum / 500 - (-1.0 / 99.0)) <= 0.02);
}

TEST_CASE("classify_sc") {
    CHECK(classify_sc(0.0) == ScClass::none);
    CHECK(classify_sc(0.5) == ScClass::positive);
    CHECK(classify_sc(-0.3) == ScClass::negative);
    CHECK_THROWS_AS(classify_sc(std::nan("")), Error);
    CHECK_THROWS_AS(classify_sc(INFINITY), Error);
}

TEST_CASE("sc_panel") {
    auto regions = geo::build_grid(geo::bbox_from_meters(kSw, 3000, 3000), 1000);
    for (std::size_t i = 0; i < regions.size(); ++i) {
        regions[i].population_density = 100.0 * i;
        regions[i].literacy_rate = 0.1 * static_cast<double>(i % 7);
        regions[i].medical_facilities = static_cast<double>(i % 3);
        regions[i].aggregate_flow = 50.0 * static_cast<double>(9 - i);
    }
    std::vector<std::string> ids;
    for (const auto& r : regions) ids.push_back(r.id);
    const std::vector<geo::Route> routes = {{ids[0], ids[8], 2}};

    SUBCASE("one week gives six results") {
        CasePanel p(ids, {0});
        for (const auto& id : ids) p.set(id, 0, 3);
        const auto res = sc_panel(p, regions, routes);
        REQUIRE(res.size() == 6);
        for (std::size_t k = 0; k < 6; ++k) {
            CHECK(res[k].metric == geo::kAllMetrics[k]);
            CHECK(res[k].sc == 0.0);
            CHECK(res[k].classification == ScClass::none);
        }
    }
    SUBCASE("missing cell is named") {
        CasePanel p(ids, {0, kWeek});
        for (const auto& id : ids) p.set(id, 0, 1);
        p.set(ids[0], kWeek, 1);
        try {
            sc_panel(p, regions, routes);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find(ids[1]) != std::string::npos);
        }
    }
    SUBCASE("clustered outbreak is positive under shared_border") {
        CasePanel p(ids, {0});
        // High counts in the top-left 2x2 block.
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const bool hot = (i / 3) < 2 && (i % 3) < 2;
            p.set(ids[i], 0, hot ? 40 : 2);
        }
        const auto res = sc_panel(p, regions, routes);
        const auto rook = geo::adjacency_matrix(regions, geo::AdjacencyMetric::shared_border);
        CHECK(res[0].sc == doctest::Approx(naive(p.week_values(0), rook)));
        CHECK(res[0].sc > 0);
        CHECK(res[0].classification == ScClass::positive);
    }
    SUBCASE("csv round trip") {
        CasePanel p(ids, {0, kWeek});
        for (std::size_t i = 0; i < ids.size(); ++i) {
            p.set(ids[i], 0, static_cast<double>(i));
            p.set(ids[i], kWeek, static_cast<double>(i * i % 5));
        }
        const auto res = sc_panel(p, regions, routes);
        CHECK(res.size() == 12);
        const auto back = parse_panel_csv(panel_csv(res));
        REQUIRE(back.size() == res.size());
        for (std::size_t k = 0; k < res.size(); ++k) {
            CHECK(back[k].metric == res[k].metric);
            CHECK(back[k].week_start == res[k].week_start);
            CHECK(back[k].sc == res[k].sc);
            CHECK(back[k].classification == res[k].classification);
        }
        CHECK_THROWS_AS(parse_panel_csv(""), Error);
    }
}

TEST_CASE("panel from events buckets weeks from the first case") {
    const auto regions = geo::build_grid(geo::bbox_from_meters(kSw, 1000, 2000), 1000);
    const std::vector<pkg::CaseEvent> cases = {{regions[0].id, 1000, 2, {}}, {regions[1].id, 1000 + kWeek, 5, {}},
                                               {regions[1].id, 1000 + kWeek + 10, 1, {}}};
    const auto p = CasePanel::from_events(cases, regions);
    REQUIRE(p.week_starts() == std::vector<Timestamp>{1000, 1000 + kWeek});
    CHECK(p.at(0, 0) == 2);
    CHECK(p.at(1, 0) == 0);
    CHECK(p.at(1, 1) == 6);
}
