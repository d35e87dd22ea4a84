#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "mobepi/geo.hpp"
#include "mobepi/patterns.hpp"

using namespace mobepi;
using namespace mobepi::patterns;

namespace {

const LatLon kBase{22.55, 88.35};
constexpr Timestamp kDay = 24 * 3600;

LatLon east(double m) { return {kBase.lat, kBase.lon + m / (kMetersPerDegree * std::cos(kBase.lat * kPi / 180.0))}; }

Event ev(const std::string& id, const std::string& type, double east_m, Timestamp t) {
    return Event{id, type, east(east_m), t};
}

using Key = std::pair<std::vector<std::string>, double>;

std::set<Key> keys(const std::vector<PatternInstance>& v) {
    std::set<Key> out;
    for (const auto& p : v) out.emplace(p.members, p.pi);
    return out;
}

// Enumerates every chain (cascading) or clique (co-occurrence) of distinct
// types up to max_size directly, then applies thresholds level by level.
std::set<Key> oracle(const std::vector<Event>& e, const NeighborRelation& nr, double thr, std::size_t max_size,
                     bool cascading) {
    std::map<std::string, double> total;
    for (const auto& x : e) total[x.type] += 1;
    std::map<std::vector<std::string>, std::vector<std::set<std::size_t>>> used;
    std::vector<std::size_t> cur;
    auto close = [&](const Event& a, const Event& b) {
        const double d = haversine_m(a.at, b.at);
        const Timestamp dt = b.t - a.t;
        if (d > nr.spatial_buffer_m) return false;
        if (cascading) return (dt > 0 || (dt == 0 && a.fact_id < b.fact_id)) && dt <= nr.temporal_span_s;
        return std::abs(dt) <= nr.temporal_span_s;
    };
    std::function<void()> rec = [&] {
        if (cur.size() >= 2) {
            std::vector<std::size_t> idx = cur;
            if (!cascading)
                std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return e[a].type < e[b].type; });
            std::vector<std::string> types;
            for (auto i : idx) types.push_back(e[i].type);
            auto& u = used[types];
            u.resize(types.size());
            for (std::size_t k = 0; k < idx.size(); ++k) u[k].insert(idx[k]);
        }
        if (cur.size() == max_size) return;
        for (std::size_t n = 0; n < e.size(); ++n) {
            bool ok = true;
            for (auto i : cur)
                if (i == n || e[i].type == e[n].type) ok = false;
            if (!ok) continue;
            if (cascading) {
                if (!cur.empty() && !close(e[cur.back()], e[n])) continue;
            } else {
                if (!cur.empty() && e[n].type < e[cur.back()].type) continue;  // each clique once
                for (auto i : cur)
                    if (!close(e[i], e[n])) ok = false;
                if (!ok) continue;
            }
            cur.push_back(n);
            rec();
            cur.pop_back();
        }
    };
    rec();
    std::set<std::vector<std::string>> kept;
    std::set<Key> out;
    for (std::size_t size = 2; size <= max_size; ++size)
        for (const auto& [types, u] : used) {
            if (types.size() != size) continue;
            double pi = 1.0;
            for (std::size_t k = 0; k < size; ++k) pi = std::min(pi, u[k].size() / total[types[k]]);
            if (pi < thr) continue;
            bool parents = true;
            if (size > 2) {
                if (cascading) {
                    parents = kept.count({types.begin(), types.end() - 1}) > 0;
                } else {
                    for (std::size_t drop = 0; drop < size; ++drop) {
                        auto sub = types;
                        sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(drop));
                        parents = parents && kept.count(sub) > 0;
                    }
                }
            }
            if (!parents) continue;
            kept.insert(types);
            out.emplace(types, pi);
        }
    return out;
}

std::vector<Event> random_events(std::mt19937_64& rng, std::size_t n) {
    std::vector<Event> e;
    for (std::size_t i = 0; i < n; ++i)
        e.push_back(ev("f" + std::to_string(100 + i), std::string(1, static_cast<char>('A' + rng() % 4)),
                       static_cast<double>(rng() % 4000), static_cast<Timestamp>(rng() % (10 * kDay))));
    return e;
}

}  // namespace

TEST_CASE("participation index examples") {
    const std::vector<Event> e = {ev("a1", "A", 0, 0), ev("a2", "A", 0, 1), ev("a3", "A", 0, 2),
                                  ev("b1", "B", 0, 3), ev("b2", "B", 0, 4)};
    CHECK(participation_index(e, {"A", "B"}, {{0, 1}, {3}}) == doctest::Approx(0.5));
    CHECK(participation_index(e, {"A", "B"}, {{0, 1, 2}, {3, 4}}) == 1.0);
    CHECK_THROWS_AS(participation_index(e, {}, {}), Error);
    CHECK_THROWS_AS(participation_index(e, {"Z"}, {{0}}), Error);
}

TEST_CASE("repeated A then B yields a full cascade") {
    std::vector<Event> e;
    for (int k = 0; k < 4; ++k) {
        e.push_back(ev("a" + std::to_string(k), "visit@A", 0, k * 10 * kDay));
        e.push_back(ev("b" + std::to_string(k), "visit@B", 500, k * 10 * kDay + 3600));
    }
    const NeighborRelation nr;
    MinerConfig cfg;
    const auto got = mine_cascading(e, nr, cfg);
    REQUIRE(got.size() == 1);
    CHECK(got[0].members == std::vector<std::string>{"visit@A", "visit@B"});
    CHECK(got[0].pi == 1.0);
    CHECK(got[0].supporting_ids.size() == 8);
    // One B too far away lowers the PI below a threshold of 0.9.
    e.push_back(ev("b9", "visit@B", 50000, 0));
    cfg.pi1 = 0.9;
    CHECK(mine_cascading(e, nr, cfg).empty());
}

TEST_CASE("air travel followed by a hotspot cascades") {
    const std::vector<Event> e = {ev("f1", "flow@R1", 0, 0), ev("h1", "hotspot@R2", 1500, 3 * kDay)};
    const auto got = mine_cascading(e, NeighborRelation{}, MinerConfig{});
    REQUIRE(got.size() == 1);
    CHECK(got[0].members == std::vector<std::string>{"flow@R1", "hotspot@R2"});
}

TEST_CASE("co-occurrence of three contexts") {
    // 5 regions; three carry all three contexts at the same time.
    std::vector<RegionContext> ctx;
    for (int r = 0; r < 5; ++r) {
        RegionContext c{"r" + std::to_string(r), east(r * 10000.0), 100, {}};
        if (r < 3) c.active = {"density>delta", "movement>gamma", "hotspot"};
        else c.active = {"density>delta"};
        ctx.push_back(c);
    }
    MinerConfig cfg;
    cfg.pi2 = 0.5;
    const auto got = mine_cooccurrence(events_from_contexts(ctx), NeighborRelation{}, cfg);
    bool found = false;
    for (const auto& p : got)
        if (p.members.size() == 3) {
            CHECK(p.members == std::vector<std::string>{"density>delta", "hotspot", "movement>gamma"});
            CHECK(p.pi == doctest::Approx(0.6));
            found = true;
        }
    CHECK(found);
}

TEST_CASE("contexts never co-located give nothing") {
    std::vector<RegionContext> ctx = {{"r0", east(0), 0, {"a"}}, {"r1", east(20000), 0, {"b"}}};
    CHECK(mine_cooccurrence(events_from_contexts(ctx), NeighborRelation{}, MinerConfig{}).empty());
}

TEST_CASE("festival plus new hotspot in the same region") {
    const std::vector<Event> e = {ev("fe", "festival", 0, 0), ev("hs", "hotspot", 200, 2 * kDay)};
    const auto got = mine_cooccurrence(e, NeighborRelation{}, MinerConfig{});
    REQUIRE(got.size() == 1);
    CHECK(got[0].members.size() == 2);
}

TEST_CASE("bruteforce cap and empty input") {
    std::mt19937_64 rng(1);
    CHECK(mine_bruteforce({}, NeighborRelation{}, MinerConfig{}, PatternKind::cascading).empty());
    CHECK_NOTHROW(mine_bruteforce(random_events(rng, 12), NeighborRelation{}, MinerConfig{}, PatternKind::cascading));
    CHECK_THROWS_AS(mine_bruteforce(random_events(rng, 13), NeighborRelation{}, MinerConfig{}, PatternKind::cascading),
                    Error);
}

TEST_CASE("miners match a direct enumeration") {
    std::mt19937_64 rng(77);
    NeighborRelation nr{1500.0, 3 * kDay};
    for (int trial = 0; trial < 60; ++trial) {
        const auto e = random_events(rng, 4 + rng() % 8);
        for (double thr : {0.2, 0.5}) {
            MinerConfig cfg{thr, thr, 3};
            CHECK(keys(mine_cascading(e, nr, cfg)) == oracle(e, nr, thr, 3, true));
            CHECK(keys(mine_cooccurrence(e, nr, cfg)) == oracle(e, nr, thr, 3, false));
            CHECK(keys(mine_bruteforce(e, nr, cfg, PatternKind::cascading)) == oracle(e, nr, thr, 3, true));
            CHECK(keys(mine_bruteforce(e, nr, cfg, PatternKind::co_occurrence)) == oracle(e, nr, thr, 3, false));
        }
    }
}

TEST_CASE("threshold monotonicity and prefix closure") {
    std::mt19937_64 rng(8);
    const NeighborRelation nr{2500.0, 4 * kDay};
    for (int trial = 0; trial < 20; ++trial) {
        const auto e = random_events(rng, 30);
        std::set<Key> prev;
        bool first = true;
        for (double thr : {0.1, 0.3, 0.6, 0.9}) {
            MinerConfig cfg{thr, thr, 3};
            const auto cas = mine_cascading(e, nr, cfg);
            const auto k = keys(cas);
            if (!first)
                for (const auto& x : k) CHECK(prev.count(x) == 1);
            prev = k;
            first = false;
            std::set<std::vector<std::string>> names;
            for (const auto& p : cas) names.insert(p.members);
            for (const auto& p : cas) {
                CHECK(p.pi >= thr);
                CHECK(p.pi <= 1.0);
                if (p.members.size() > 2) CHECK(names.count({p.members.begin(), p.members.end() - 1}) == 1);
            }
        }
    }
}

TEST_CASE("json line round trip") {
    const PatternInstance p{PatternKind::co_occurrence, {"a", "b"}, {"x1", "y2"}, 0.375};
    CHECK(pattern_from_json_line(to_json_line(p)) == p);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(validate(NeighborRelation{0.0, 10}), Error);
    CHECK_THROWS_AS(validate(MinerConfig{0.0, 0.3, 3}), Error);
    CHECK_THROWS_AS(validate(MinerConfig{0.3, 0.3, 1}), Error);
}

TEST_CASE("pkg facts become anchored events") {
    const auto regions = geo::build_grid(geo::bbox_from_meters(kBase, 1000, 1000), 1000);
    geo::Place p;
    p.id = "P";
    p.location = kBase;
    pkg::PkgStore s;
    s.assert_fact(make_fact("u1", Relation::visit, "P", Interval::closed(0, 10), 1.0));
    s.assert_fact(make_fact("u1", Relation::visit, "nowhere", Interval::closed(0, 10), 1.0));
    const auto locate = make_locator({p}, regions);
    const auto e = events_from_pkg(s, locate, Tagging::anchored);
    REQUIRE(e.size() == 1);
    CHECK(e[0].type == "visit@P");
    CHECK(events_from_pkg(s, locate, Tagging::relation_only)[0].type == "visit");
}
