#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <thread>

#include "mobepi/dataio.hpp"
#include "mobepi/pkg.hpp"

using namespace mobepi;
using namespace mobepi::pkg;

namespace {

const LatLon kOrigin{22.55, 88.35};

LatLon offset(const LatLon& p, double north_m, double east_m) {
    return {p.lat + north_m / kMetersPerDegree,
            p.lon + east_m / (kMetersPerDegree * std::cos(p.lat * kPi / 180.0))};
}

geo::Place place(const std::string& id, const LatLon& at) {
    geo::Place p;
    p.id = id;
    p.location = at;
    return p;
}

TemporalFact visit(const std::string& user, const std::string& place, Timestamp a, Timestamp b) {
    return make_fact(user, Relation::visit, place, Interval::closed(a, b), 1.0);
}

// Overlap written out from the definition: closed intervals, open end unbounded.
bool overlaps_ref(const Interval& f, const Interval& w) {
    const bool f_before_w_end = !w.t2 || f.t1 <= *w.t2;
    const bool w_before_f_end = !f.t2 || w.t1 <= *f.t2;
    return f_before_w_end && w_before_f_end;
}

std::vector<std::string> ids_of(const std::vector<TemporalFact>& v) {
    std::vector<std::string> out;
    for (const auto& f : v) out.push_back(f.id);
    return out;
}

PkgStore random_store(std::mt19937_64& rng, std::size_t n) {
    PkgStore s;
    for (std::size_t i = 0; i < n; ++i) {
        const auto subj = "u" + std::to_string(rng() % 30);
        const auto obj = "p" + std::to_string(rng() % 20);
        const Relation rel = kAllRelations[rng() % 3];  // visit, group, flow
        const Timestamp t1 = static_cast<Timestamp>(rng() % 10000);
        const Interval iv = rng() % 10 == 0 ? Interval::open(t1) : Interval::closed(t1, t1 + static_cast<Timestamp>(rng() % 500));
        double f = static_cast<double>(rng() % 100) / 100.0;
        if (rel == Relation::group) f = std::min(f, 0.9);
        s.assert_fact(make_fact(rel == Relation::group ? encode_set({subj, "u99"}) : subj, rel, obj, iv, f));
    }
    return s;
}

}  // namespace

TEST_CASE("assert_fact upserts on the key") {
    PkgStore s;
    const auto a = s.assert_fact(visit("u1", "P", 0, 10));
    auto again = visit("u1", "P", 0, 10);
    again.feature = 0.5;
    const auto b = s.assert_fact(again);
    CHECK(a == b);
    CHECK(s.size() == 1);
    CHECK(s.find(a)->feature == 0.5);
}

TEST_CASE("assert_fact rejects t1 > t2 and counts distinct facts") {
    PkgStore s;
    CHECK_THROWS_AS(s.assert_fact(visit("u1", "P", 10, 5)), Error);
    for (int i = 0; i < 25; ++i) s.assert_fact(visit("u1", "P", i * 100, i * 100 + 50));
    CHECK(s.size() == 25);
}

TEST_CASE("query window overlap semantics") {
    PkgStore s;
    s.assert_fact(visit("u", "A", 8, 12));
    s.assert_fact(visit("u", "B", 11, 12));
    s.assert_fact(make_fact("u", Relation::visit, "C", Interval::open(1000), 1.0));
    PkgQuery q;
    q.window = Interval::closed(5, 10);
    auto r = s.query(q);
    REQUIRE(r.size() == 1);
    CHECK(r[0].object == "A");
    q.window = Interval::closed(1100, 1200);
    r = s.query(q);
    REQUIRE(r.size() == 1);
    CHECK(r[0].object == "C");
    q.window = Interval::closed(12, 12);
    CHECK(s.query(q).size() == 2);  // shared endpoints overlap
}

TEST_CASE("query with nothing bound is rejected") {
    PkgStore s;
    CHECK_THROWS_AS(s.query(PkgQuery{}), Error);
}

TEST_CASE("query equals a linear scan on random stores") {
    std::mt19937_64 rng(42);
    for (int store_no = 0; store_no < 4; ++store_no) {
        const PkgStore s = random_store(rng, 800);
        const auto all = s.facts();
        for (int k = 0; k < 250; ++k) {
            PkgQuery q;
            if (rng() % 2) q.subject = "u" + std::to_string(rng() % 32);
            if (rng() % 3 == 0) q.relation = kAllRelations[rng() % 3];
            if (rng() % 2) q.object = "p" + std::to_string(rng() % 22);
            if (rng() % 2 || !q.any_bound()) {
                const Timestamp a = static_cast<Timestamp>(rng() % 11000);
                q.window = rng() % 8 == 0 ? Interval::open(a) : Interval::closed(a, a + static_cast<Timestamp>(rng() % 900));
            }
            std::vector<TemporalFact> expect;
            for (const auto& f : all) {
                if (q.subject && f.subject != *q.subject) continue;
                if (q.relation && f.relation != *q.relation) continue;
                if (q.object && f.object != *q.object) continue;
                if (q.window && !overlaps_ref(f.interval, *q.window)) continue;
                expect.push_back(f);
            }
            CHECK(ids_of(s.query(q)) == ids_of(expect));
        }
    }
}

TEST_CASE("concurrent readers see the same results") {
    std::mt19937_64 rng(5);
    const PkgStore s = random_store(rng, 500);
    PkgQuery q;
    q.relation = Relation::visit;
    const auto expect = ids_of(s.query(q));
    std::vector<std::vector<std::string>> got(4);
    std::vector<std::thread> th;
    for (int i = 0; i < 4; ++i) th.emplace_back([&, i] { got[i] = ids_of(s.query(q)); });
    for (auto& t : th) t.join();
    for (const auto& g : got) CHECK(g == expect);
}

TEST_CASE("fact ids do not depend on insertion order") {
    std::vector<TemporalFact> facts;
    for (int i = 0; i < 50; ++i) facts.push_back(visit("u" + std::to_string(i % 7), "p" + std::to_string(i % 5), i * 60, i * 60 + 30));
    PkgStore a, b;
    a.assert_all(facts);
    std::reverse(facts.begin(), facts.end());
    b.assert_all(facts);
    CHECK(ids_of(a.facts()) == ids_of(b.facts()));
}

TEST_CASE("persist round trip is exact") {
    std::mt19937_64 rng(9);
    const PkgStore s = random_store(rng, 300);
    const auto text = io::format_pkg(s);
    const auto back = io::parse_pkg(text, "mem");
    CHECK(back.facts() == s.facts());
    CHECK(io::format_pkg(back) == text);
}

TEST_CASE("derive_visits") {
    const auto P = place("P", kOrigin);
    User u;
    u.id = "u1";
    SUBCASE("empty trajectory") {
        CHECK(derive_visits(u, {P}, 100, 600).empty());
    }
    SUBCASE("15 samples over 15 minutes near P") {
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> d(-35, 35);
        for (int i = 0; i < 15; ++i) u.trajectory.push_back({1000 + i * 64, offset(kOrigin, d(rng), d(rng))});
        for (const auto& s : u.trajectory) REQUIRE(haversine_m(s.at, kOrigin) <= 50.0);
        const auto v = derive_visits(u, {P}, 100, 600);
        REQUIRE(v.size() == 1);
        CHECK(v[0].object == "P");
        CHECK(v[0].interval == Interval::closed(1000, 1000 + 14 * 64));
        CHECK(v[0].feature == 1.0);
    }
    SUBCASE("alternating between places 5 km apart") {
        const auto Q = place("Q", offset(kOrigin, 0, 5000));
        for (int i = 0; i < 30; ++i) u.trajectory.push_back({i * 60, i % 2 ? Q.location : P.location});
        CHECK(derive_visits(u, {P, Q}, 100, 600).empty());
    }
    SUBCASE("two stays get relative features") {
        for (int i = 0; i <= 20; ++i) u.trajectory.push_back({i * 60, kOrigin});
        u.trajectory.push_back({2000, offset(kOrigin, 3000, 0)});
        for (int i = 0; i <= 10; ++i) u.trajectory.push_back({3000 + i * 60, kOrigin});
        const auto v = derive_visits(u, {P}, 100, 300);
        REQUIRE(v.size() == 2);
        CHECK(v[0].feature == doctest::Approx(1.0));
        CHECK(v[1].feature == doctest::Approx(0.5));
    }
    SUBCASE("bad parameters") {
        CHECK_THROWS_AS(derive_visits(u, {P}, 0, 600), Error);
        CHECK_THROWS_AS(derive_visits(u, {P}, 100, 0), Error);
    }
}

TEST_CASE("derive_groups") {
    std::vector<TemporalFact> v;
    auto tour = [&](const std::string& user, std::vector<std::string> places) {
        for (std::size_t i = 0; i < places.size(); ++i)
            v.push_back(visit(user, places[i], 1000 * static_cast<Timestamp>(i), 1000 * static_cast<Timestamp>(i) + 600));
    };
    SUBCASE("three users share three places") {
        tour("a", {"P", "Q", "R"});
        tour("b", {"P", "Q", "R"});
        tour("c", {"P", "Q", "R"});
        const auto g = derive_groups(v, 0);
        REQUIRE(g.size() == 1);
        CHECK(g[0].subject == "{a|b|c}");
        CHECK(g[0].object == "[P>Q>R]");
        CHECK(g[0].feature == doctest::Approx(0.75));
        CHECK(g[0].feature < 1.0);
    }
    SUBCASE("only two shared places") {
        tour("a", {"P", "Q", "R"});
        tour("b", {"P", "Q", "S"});
        CHECK(derive_groups(v, 0).empty());
    }
    SUBCASE("single user") {
        tour("a", {"P", "Q", "R", "S"});
        CHECK(derive_groups(v, 0).empty());
    }
    SUBCASE("nested groups are both maximal") {
        tour("a", {"P", "Q", "R", "S"});
        tour("b", {"P", "Q", "R", "S"});
        tour("c", {"P", "Q", "R", "T"});
        const auto g = derive_groups(v, 0);
        std::set<std::pair<std::string, std::string>> got;
        for (const auto& f : g) got.emplace(f.subject, f.object);
        CHECK(got == std::set<std::pair<std::string, std::string>>{{"{a|b}", "[P>Q>R>S]"}, {"{a|b|c}", "[P>Q>R]"}});
    }
    SUBCASE("time tolerance joins near-misses") {
        for (const std::string& u : {"a", "b"})
            for (int i = 0; i < 3; ++i) {
                const Timestamp shift = u == "b" ? 700 : 0;
                v.push_back(visit(u, "P" + std::to_string(i), i * 5000 + shift, i * 5000 + shift + 600));
            }
        CHECK(derive_groups(v, 0).empty());
        CHECK(derive_groups(v, 200).size() == 1);
    }
}

TEST_CASE("derive_flows") {
    std::vector<TemporalFact> v;
    auto trip = [&](const std::string& u, Timestamp leave) {
        v.push_back(visit(u, "A", leave - 900, leave));
        v.push_back(visit(u, "B", leave + 600, leave + 1500));
    };
    SUBCASE("three movers in one slot") {
        for (const char* u : {"x", "y", "z"}) trip(u, 7200 + 100);
        const auto f = derive_flows(v, 3);
        REQUIRE(f.size() == 1);
        CHECK(f[0].subject == "A");
        CHECK(f[0].object == "B");
        CHECK(f[0].feature == 3.0);
        CHECK(f[0].interval == Interval::closed(7200, 10799));
    }
    SUBCASE("two movers below threshold") {
        for (const char* u : {"x", "y"}) trip(u, 7300);
        CHECK(derive_flows(v, 3).empty());
    }
    SUBCASE("threshold one") {
        trip("x", 7300);
        CHECK(derive_flows(v, 1).size() == 1);
    }
    SUBCASE("different slots do not pool") {
        trip("x", 7300);
        trip("y", 7300);
        trip("z", 7300 + 3600);
        CHECK(derive_flows(v, 3).empty());
    }
    SUBCASE("oracle: pair counting over random visits") {
        std::mt19937_64 rng(17);
        for (int u = 0; u < 40; ++u) {
            Timestamp t = static_cast<Timestamp>(rng() % 3600);
            for (int k = 0; k < 6; ++k) {
                const Timestamp d = 300 + static_cast<Timestamp>(rng() % 2000);
                v.push_back(visit("u" + std::to_string(u), "p" + std::to_string(rng() % 3), t, t + d));
                t += d + 60 + static_cast<Timestamp>(rng() % 600);
            }
        }
        std::map<std::tuple<std::string, std::string, Timestamp>, std::set<std::string>> count;
        for (const auto& a : v)
            for (const auto& b : v) {
                if (a.subject != b.subject || a.object == b.object || b.interval.t1 <= a.interval.t1) continue;
                bool between = false;
                for (const auto& c : v)
                    if (c.subject == a.subject && c.interval.t1 > a.interval.t1 && c.interval.t1 < b.interval.t1) between = true;
                if (!between) count[{a.object, b.object, *a.interval.t2 / 3600}].insert(a.subject);
            }
        for (int nu : {1, 2, 3}) {
            std::set<std::tuple<std::string, std::string, Timestamp, double>> expect, got;
            for (const auto& [k, users] : count)
                if (static_cast<int>(users.size()) >= nu)
                    expect.emplace(std::get<0>(k), std::get<1>(k), std::get<2>(k) * 3600, static_cast<double>(users.size()));
            for (const auto& f : derive_flows(v, nu)) got.emplace(f.subject, f.object, f.interval.t1, f.feature);
            CHECK(got == expect);
        }
    }
}

TEST_CASE("derive_hotspot_facts") {
    const auto regions = geo::build_grid(geo::bbox_from_meters(kOrigin, 5000, 5000), 1000);
    SUBCASE("no cases") {
        CHECK(derive_hotspot_facts({}, regions).empty());
    }
    SUBCASE("one tight cluster of 25") {
        const auto& r = regions[6];
        std::vector<CaseEvent> cases;
        for (int i = 0; i < 25; ++i) cases.push_back({r.id, 100 + i, 1, offset(r.center(), (i % 5) * 40.0 - 80, (i / 5) * 40.0 - 80)});
        const auto h = derive_hotspot_facts(cases, regions);
        REQUIRE(h.size() == 1);
        CHECK(h[0].feature == 25.0);
        CHECK(h[0].interval == Interval::open(100));
        CHECK(h[0].object == encode_set({r.id}));
    }
    SUBCASE("two disjoint clusters") {
        std::vector<CaseEvent> cases;
        for (std::size_t idx : {std::size_t{6}, std::size_t{18}})
            for (int i = 0; i < 25; ++i) cases.push_back({regions[idx].id, 100, 1, regions[idx].center()});
        const auto h = derive_hotspot_facts(cases, regions);
        REQUIRE(h.size() == 2);
        CHECK(h[0].subject != h[1].subject);
    }
}

TEST_CASE("contact_trace") {
    PkgStore s;
    SUBCASE("alone everywhere") {
        s.assert_fact(visit("inf", "P", 0, 600));
        s.assert_fact(visit("b", "Q", 0, 600));
        CHECK(contact_trace("inf", s, 0, 0).empty());
    }
    SUBCASE("one overlap, one disjoint") {
        s.assert_fact(visit("inf", "P", 0, 1200));
        s.assert_fact(visit("b", "P", 600, 1800));
        s.assert_fact(visit("c", "P", 5000, 6000));
        CHECK(contact_trace("inf", s, 0, 900) == std::vector<std::string>{"b"});
        CHECK(contact_trace("inf", s, 0, 4000) == std::vector<std::string>{"b", "c"});
    }
    SUBCASE("unknown user") {
        s.assert_fact(visit("b", "P", 0, 10));
        CHECK_THROWS_AS(contact_trace("nobody", s, 0, 0), Error);
    }
    SUBCASE("symmetric at zero tolerance and equal to a pair scan") {
        std::mt19937_64 rng(23);
        for (int i = 0; i < 300; ++i) {
            const Timestamp t = static_cast<Timestamp>(rng() % 50000);
            s.assert_fact(visit("u" + std::to_string(rng() % 25), "p" + std::to_string(rng() % 12), t, t + 300 + static_cast<Timestamp>(rng() % 1500)));
        }
        const auto all = s.facts();
        std::set<std::string> users;
        for (const auto& f : all) users.insert(f.subject);
        std::map<std::string, std::set<std::string>> traced;
        for (const auto& u : users) {
            const auto got = contact_trace(u, s, 0, 0);
            traced[u] = {got.begin(), got.end()};
            std::set<std::string> expect;
            for (const auto& a : all)
                for (const auto& b : all)
                    if (a.subject == u && b.subject != u && a.object == b.object && overlaps_ref(a.interval, b.interval))
                        expect.insert(b.subject);
            CHECK(traced[u] == expect);
        }
        for (const auto& [a, set] : traced)
            for (const auto& b : set) CHECK(traced[b].count(a) == 1);
    }
}

TEST_CASE("route_facts carry route counts") {
    const auto f = route_facts({{"A", "B", 3}}, Interval::open(0));
    REQUIRE(f.size() == 1);
    CHECK(f[0].relation == Relation::connectivity);
    CHECK(f[0].feature == 3.0);
}
