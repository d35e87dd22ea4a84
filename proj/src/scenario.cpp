#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

#include "mobepi/dataio.hpp"
#include "mobepi/embeddings.hpp"

namespace mobepi::io {

namespace {

constexpr Timestamp kDay = 24 * 3600;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }
std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

double round_to(double v, double step) { return std::round(v / step) * step; }

/// Point `dist_m` from `c` along `bearing` (radians from north), flat-earth step.
LatLon offset(const LatLon& c, double dist_m, double bearing) {
    const double dlat = dist_m * std::cos(bearing) / kMetersPerDegree;
    const double dlon = dist_m * std::sin(bearing) / (kMetersPerDegree * std::cos(c.lat * kPi / 180.0));
    return {c.lat + dlat, c.lon + dlon};
}

LatLon jitter(std::mt19937_64& rng, const LatLon& c, double max_m) {
    return offset(c, max_m * std::sqrt(uniform01(rng)), uniform(rng, 0.0, 2.0 * kPi));
}

LatLon point_in(const geo::BBox& b, double fy, double fx) {
    return {b.min_lat + fy * (b.max_lat - b.min_lat), b.min_lon + fx * (b.max_lon - b.min_lon)};
}

/// Samples every `period` seconds for `duration` seconds around a place.
void stay(std::mt19937_64& rng, pkg::User& u, const geo::Place& p, Timestamp from, Timestamp duration,
          Timestamp period) {
    for (Timestamp t = from; t <= from + duration; t += period) u.trajectory.push_back({t, jitter(rng, p.location, 25.0)});
}

}  // namespace

void validate(const ScenarioConfig& cfg) {
    require(cfg.grid_rows >= 5 && cfg.grid_cols >= 5, "scenario grid must be at least 5 x 5 (planted structures)");
    require(cfg.cell_size_m >= 800.0 && std::isfinite(cfg.cell_size_m),
            "cell_size_m must be >= 800 so planted hotspots stay inside their cell");
    require(cfg.days >= 2, "scenario needs at least 2 days of trajectories");
    require(cfg.weeks_of_cases >= 2, "scenario needs at least 2 weeks of cases");
    require(cfg.sample_period_s >= 60 && cfg.sample_period_s <= 300,
            "sample_period_s must lie in [60, 300] so planted stays are detected");
    require(cfg.background_users >= 1, "scenario needs background users");
    require(cfg.flow_users >= 1 && cfg.flow_users <= 10, "flow_users must lie in [1, 10]");
    require(cfg.group_users >= 2 && cfg.group_users <= 10, "a planted group needs 2 to 10 users");
    if (cfg.c1_cases <= 20) fail(ErrorKind::invalid_input, "planted C1 hotspot needs more than 20 cases within 500 m");
    if (cfg.c2_cases <= 50) fail(ErrorKind::invalid_input, "planted C2 hotspot needs more than 50 cases within 1 km");
    require(cfg.c1_cases <= 200 && cfg.c2_cases <= 200, "planted case counts above 200 spill into neighbours");
}

Scenario synthesize_scenario(const ScenarioConfig& cfg) {
    validate(cfg);
    std::mt19937_64 rng(cfg.seed);
    Scenario sc;
    sc.config = cfg;
    Dataset& d = sc.data;
    const double height = static_cast<double>(cfg.grid_rows) * cfg.cell_size_m;
    const double width = static_cast<double>(cfg.grid_cols) * cfg.cell_size_m;
    const geo::Grid grid(geo::bbox_from_meters({cfg.origin_lat, cfg.origin_lon}, height, width), cfg.cell_size_m);
    require(grid.rows() == cfg.grid_rows && grid.cols() == cfg.grid_cols, "grid construction mismatch");
    d.regions = grid.regions();
    for (auto& r : d.regions) {
        r.population_density = round_to(uniform(rng, 2000, 20000), 1);
        r.literacy_rate = round_to(uniform(rng, 0.6, 0.95), 0.001);
        r.medical_facilities = static_cast<double>(1 + pick(rng, 20));
        r.aggregate_flow = round_to(uniform(rng, 1000, 50000), 1);
    }
    const auto cell = [&](std::size_t row, std::size_t col) { return row * cfg.grid_cols + col; };

    // Two places per cell, ~570 m apart; neighbours' places are >= ~600 m apart.
    const geo::PoiType cycle[] = {geo::PoiType::commercial, geo::PoiType::hospital, geo::PoiType::park,
                                  geo::PoiType::rail_junction, geo::PoiType::other};
    std::vector<geo::Place> places;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto b = grid.cell_bbox(k);
        for (int which = 0; which < 2; ++which) {
            geo::Place p;
            p.id = "p_" + grid.cell_id(k) + (which == 0 ? "_a" : "_b");
            p.poi_type = which == 0 ? geo::PoiType::residence : (k == 0 ? geo::PoiType::airport : cycle[k % 5]);
            p.location = jitter(rng, point_in(b, which == 0 ? 0.3 : 0.7, which == 0 ? 0.3 : 0.7), 40.0);
            p.area_m2 = round_to(uniform(rng, 500, 5000), 1);
            if (p.poi_type == geo::PoiType::commercial) p.opening_hours = geo::DailyHours{8 * 3600, 22 * 3600};
            p.region_id = grid.cell_id(k);
            places.push_back(p);
        }
    }
    auto place_of = [&](std::size_t k, int which) -> const geo::Place& { return places[2 * k + which]; };
    const geo::Place& flow_a = place_of(cell(0, 3), 0);
    const geo::Place& flow_b = place_of(cell(0, 4), 1);
    const std::vector<const geo::Place*> group_places = {&place_of(cell(4, 0), 0), &place_of(cell(4, 0), 1),
                                                         &place_of(cell(4, 1), 0)};
    std::set<std::string> reserved = {flow_a.id, flow_b.id};
    for (const auto* p : group_places) reserved.insert(p->id);

    std::vector<const geo::Place*> homes, pois;
    for (const auto& p : places) {
        if (reserved.count(p.id)) continue;
        pois.push_back(&p);
        if (p.poi_type == geo::PoiType::residence) homes.push_back(&p);
    }

    // Background users: home/POI Markov walk.
    const Timestamp end = cfg.start + static_cast<Timestamp>(cfg.days) * kDay;
    const Timestamp period = cfg.sample_period_s;
    for (std::size_t i = 0; i < cfg.background_users; ++i) {
        pkg::User u;
        char id[16];
        std::snprintf(id, sizeof(id), "u%03zu", i);
        u.id = id;
        u.age = 18 + static_cast<int>(pick(rng, 63));
        u.gender = i % 2 ? "m" : "f";
        const geo::Place* home = homes[pick(rng, homes.size())];
        u.residence_region = home->region_id;
        u.health_profile = "default";
        const geo::Place* at = home;
        Timestamp t = cfg.start + 60 * static_cast<Timestamp>(pick(rng, 60));
        while (t < end) {
            const bool at_home = at == home;
            const Timestamp dwell = (at_home ? 2 + static_cast<Timestamp>(pick(rng, 5))
                                             : 1 + static_cast<Timestamp>(pick(rng, 3))) * 3600;
            for (Timestamp s = 0; s < dwell && t < end; s += period, t += period)
                u.trajectory.push_back({t, jitter(rng, at->location, 25.0)});
            const geo::Place* next = at;
            const double x = uniform01(rng);
            if (at_home) {
                if (x < 0.7) next = pois[pick(rng, pois.size())];
            } else {
                next = x < 0.6 ? home : pois[pick(rng, pois.size())];
            }
            if (next != at) t += period;  // travel gap
            at = next;
        }
        d.users.push_back(std::move(u));
    }

    // Planted flow A -> B: every flow user leaves A within the same hour slot.
    const Timestamp flow_start = cfg.start + 10 * 3600;
    for (std::size_t i = 0; i < cfg.flow_users; ++i) {
        pkg::User u;
        u.id = "f" + std::to_string(i);
        u.age = 30 + static_cast<int>(i);
        u.gender = i % 2 ? "m" : "f";
        u.residence_region = flow_a.region_id;
        u.health_profile = "default";
        const Timestamp t0 = flow_start + static_cast<Timestamp>(i) * 60;
        stay(rng, u, flow_a, t0, 2400, period);
        stay(rng, u, flow_b, t0 + 3000, 2700, period);
        d.users.push_back(std::move(u));
        sc.truth.flow_users.push_back("f" + std::to_string(i));
    }
    sc.truth.flow_from = flow_a.id;
    sc.truth.flow_to = flow_b.id;
    sc.truth.flow_slot = flow_start;

    // Planted group: same three places in the same intervals.
    const Timestamp group_start = cfg.start + kDay + 14 * 3600;
    for (std::size_t i = 0; i < cfg.group_users; ++i) {
        pkg::User u;
        u.id = "g" + std::to_string(i);
        u.age = 40 + static_cast<int>(i);
        u.gender = i % 2 ? "m" : "f";
        u.residence_region = group_places[0]->region_id;
        u.health_profile = "default";
        const Timestamp t0 = group_start + static_cast<Timestamp>(i) * 60;
        for (std::size_t k = 0; k < group_places.size(); ++k)
            stay(rng, u, *group_places[k], t0 + static_cast<Timestamp>(k) * 3600, 2700, period);
        d.users.push_back(std::move(u));
        sc.truth.group_users.push_back("g" + std::to_string(i));
    }
    for (const auto* p : group_places) sc.truth.group_places.push_back(p->id);
    std::sort(d.users.begin(), d.users.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

    // Routes between random region pairs.
    std::set<std::pair<std::string, std::string>> route_pairs;
    while (route_pairs.size() < 8) {
        const auto a = pick(rng, grid.size()), b = pick(rng, grid.size());
        if (a != b) route_pairs.insert({grid.cell_id(a), grid.cell_id(b)});
    }
    for (const auto& [a, b] : route_pairs) d.routes.push_back({a, b, 1 + static_cast<int>(pick(rng, 5))});

    // Cases: sparse background, dense planted clusters in the last two weeks.
    const std::size_t c1 = cell(1, 1), c2 = cell(3, 3);
    const Timestamp week = 7 * kDay;
    const Timestamp weeks = static_cast<Timestamp>(cfg.weeks_of_cases);
    auto tag = [&](const LatLon& p) { return grid.cell_id(grid.cell_index(p).value()); };
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (k == c1 || k == c2) continue;
        for (Timestamp w = 0; w < weeks; ++w) {
            if (uniform01(rng) >= 0.5) continue;
            const LatLon p = point_in(grid.cell_bbox(k), uniform(rng, 0.05, 0.95), uniform(rng, 0.05, 0.95));
            d.cases.push_back({grid.cell_id(k), cfg.start + w * week + static_cast<Timestamp>(pick(rng, week)),
                               1 + static_cast<int>(pick(rng, 2)), p});
        }
    }
    const Timestamp late = cfg.start + (weeks - 2) * week;
    const LatLon c1_center = d.regions[c1].center(), c2_center = d.regions[c2].center();
    for (int i = 0; i < cfg.c1_cases; ++i) {
        const LatLon p = offset(c1_center, uniform(rng, 0.0, 300.0), uniform(rng, 0.0, 2.0 * kPi));
        d.cases.push_back({tag(p), late + static_cast<Timestamp>(pick(rng, 2 * week)), 1, p});
    }
    for (int i = 0; i < cfg.c2_cases; ++i) {
        const LatLon p = offset(c2_center, uniform(rng, 520.0, 650.0), uniform(rng, 0.0, 2.0 * kPi));
        d.cases.push_back({tag(p), late + static_cast<Timestamp>(pick(rng, 2 * week)), 1, p});
    }
    std::sort(d.cases.begin(), d.cases.end(), [](const auto& a, const auto& b) {
        return std::tie(a.t, a.region_id) < std::tie(b.t, b.region_id);
    });

    // The labelling rules must reproduce exactly the planted hotspots.
    for (const auto& r : d.regions) {
        const auto cls = net::label_region(d.cases, r, d.regions);
        const bool want_c1 = r.id == d.regions[c1].id, want_c2 = r.id == d.regions[c2].id;
        if ((cls == net::HotspotClass::c1) != want_c1 || (cls == net::HotspotClass::c2) != want_c2)
            fail(ErrorKind::invalid_input, "planted hotspots are not reproduced by the labelling rules at region " +
                                               r.id + " (got " + net::to_string(cls) + ")");
    }
    sc.truth.c1_regions = {d.regions[c1].id};
    sc.truth.c2_regions = {d.regions[c2].id};

    // Mass gatherings one day after each hotspot emerges, plus one elsewhere.
    for (const auto& f : pkg::derive_hotspot_facts(d.cases, d.regions))
        for (const auto& id : decode_set(f.object)) {
            const auto& r = *std::find_if(d.regions.begin(), d.regions.end(), [&](const auto& x) { return x.id == id; });
            d.contexts.push_back({id, r.center(), f.interval.t1 + kDay, {"mass_gathering"}});
        }
    const auto& quiet = d.regions[cell(0, 0)];
    d.contexts.push_back({quiet.id, quiet.center(), cfg.start + static_cast<Timestamp>(pick(rng, week)),
                          {"mass_gathering"}});
    std::sort(d.contexts.begin(), d.contexts.end(), [](const auto& a, const auto& b) {
        return std::tie(a.region_id, a.t) < std::tie(b.region_id, b.t);
    });

    d.places = places;
    link_dataset(d);
    sc.truth.cascading_pattern = {"visit@" + flow_a.id, "visit@" + flow_b.id};
    sc.truth.cooccurrence_pattern = {"hotspot", "mass_gathering"};
    return sc;
}

std::string truth_json(const PlantedTruth& t) {
    nlohmann::json j = {{"c1_regions", t.c1_regions},
                        {"c2_regions", t.c2_regions},
                        {"flow", {{"from", t.flow_from}, {"to", t.flow_to}, {"users", t.flow_users}, {"slot", t.flow_slot}}},
                        {"group", {{"users", t.group_users}, {"places", t.group_places}}},
                        {"cascading_pattern", t.cascading_pattern},
                        {"cooccurrence_pattern", t.cooccurrence_pattern}};
    return j.dump(1) + "\n";
}

void write_scenario(const Scenario& s, const std::string& dir) {
    save_dataset(s.data, dir);
    const auto path = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };
    write_file(path("truth.json"), truth_json(s.truth));
    write_file(path("catalog.json"), catalog_json(make_catalog(s.data, "mobepi-synth seed " +
                                                                          std::to_string(s.config.seed))));
}

// ---------------------------------------------------------------------------

namespace {

std::size_t weekday(Timestamp t) {
    const Timestamp days = t >= 0 ? t / kDay : (t - kDay + 1) / kDay;
    return static_cast<std::size_t>(((days + 3) % 7 + 7) % 7);  // Monday = 0
}

std::size_t hour_of(Timestamp t) { return static_cast<std::size_t>(((t % kDay) + kDay) % kDay / 3600); }

}  // namespace

std::vector<net::RegionSample> build_region_samples(const Dataset& d, const pkg::PkgStore& store,
                                                    const std::vector<stats::ScResult>& sc,
                                                    const std::vector<patterns::PatternInstance>& pats, Timestamp at,
                                                    const SampleOptions& opts) {
    require(!d.regions.empty(), "no regions");
    require(opts.steps >= 1, "samples need at least one step");
    const std::size_t R = d.regions.size();
    std::map<std::string, std::size_t> region_index;
    for (std::size_t i = 0; i < R; ++i) region_index[d.regions[i].id] = i;
    std::map<std::string, std::string> place_region;
    for (const auto& p : d.places) place_region[p.id] = p.region_id;

    auto regions_of_entity = [&](const std::string& e) {
        std::vector<std::string> parts;
        if (is_set(e)) {
            parts = decode_set(e);
        } else if (e.size() > 2 && e.front() == '[' && e.back() == ']') {
            parts = split(std::string_view(e).substr(1, e.size() - 2), '>');
        } else {
            parts = {e};
        }
        std::set<std::size_t> out;
        for (const auto& p : parts) {
            if (auto it = region_index.find(p); it != region_index.end()) out.insert(it->second);
            if (auto it = place_region.find(p); it != place_region.end()) out.insert(region_index.at(it->second));
        }
        return out;
    };

    std::vector<double> sc_now(geo::kAllMetrics.size(), 0.0);
    std::vector<Timestamp> sc_week(geo::kAllMetrics.size(), std::numeric_limits<Timestamp>::min());
    for (const auto& r : sc) {
        const auto m = static_cast<std::size_t>(r.metric);
        if (r.week_start <= at && r.week_start >= sc_week[m]) {
            sc_week[m] = r.week_start;
            sc_now[m] = r.sc;
        }
    }

    std::vector<std::array<bool, 2>> flags(R, {false, false});
    for (const auto& p : pats) {
        const int kind = p.kind == patterns::PatternKind::cascading ? 0 : 1;
        for (const auto& id : p.supporting_ids) {
            std::set<std::size_t> rs;
            if (id.rfind("ctx:", 0) == 0) {
                const auto region = id.substr(4, id.find(':', 4) - 4);
                if (auto it = region_index.find(region); it != region_index.end()) rs.insert(it->second);
            } else if (auto f = store.find(id)) {
                rs = regions_of_entity(f->object);
                if (f->relation != Relation::visit)
                    for (auto r : regions_of_entity(f->subject)) rs.insert(r);
            }
            for (auto r : rs) flags[r][kind] = true;
        }
    }

    // Region-level connectivity from routes and place flows up to `at`.
    std::vector<TemporalFact> region_facts;
    for (const auto& f : store.facts()) {
        if (f.relation != Relation::connectivity && f.relation != Relation::connected_by && f.relation != Relation::flow)
            continue;
        const auto s = regions_of_entity(f.subject), o = regions_of_entity(f.object);
        if (s.empty() || o.empty()) continue;
        TemporalFact g = f;
        g.subject = d.regions[*s.begin()].id;
        g.object = d.regions[*o.begin()].id;
        region_facts.push_back(g);
    }
    std::vector<double> air(R, 0.0);
    for (const auto& ci :
         geo::connectivity_indices(region_facts, Interval::closed(std::numeric_limits<Timestamp>::min(), at)))
        if (auto it = region_index.find(ci.place_id); it != region_index.end()) air[it->second] = ci.ci;

    auto normalized = [&](auto get) {
        std::vector<double> v(R, 0.0);
        double mx = 0.0;
        for (std::size_t i = 0; i < R; ++i) {
            v[i] = get(d.regions[i]).value_or(0.0);
            mx = std::max(mx, v[i]);
        }
        if (mx > 0)
            for (auto& x : v) x /= mx;
        return v;
    };
    const auto density = normalized([](const geo::Region& r) { return r.population_density; });
    const auto literacy = normalized([](const geo::Region& r) { return r.literacy_rate; });
    const auto medical = normalized([](const geo::Region& r) { return r.medical_facilities; });
    const auto flow = normalized([](const geo::Region& r) { return r.aggregate_flow; });

    std::vector<std::array<double, 3>> poi(R, {0, 0, 0});
    for (const auto& p : d.places) {
        auto& c = poi[region_index.at(p.region_id)];
        if (p.poi_type == geo::PoiType::hospital) c[0] += 1;
        if (p.poi_type == geo::PoiType::commercial) c[1] += 1;
        if (p.poi_type == geo::PoiType::airport || p.poi_type == geo::PoiType::rail_junction) c[2] += 1;
    }

    // Visits up to `at`, per user in time order.
    std::vector<TemporalFact> visits;
    for (const auto& f : store.query({std::nullopt, Relation::visit, std::nullopt, std::nullopt}))
        if (f.interval.t1 <= at && place_region.count(f.object)) visits.push_back(f);
    std::map<std::string, std::vector<const TemporalFact*>> by_user;
    for (const auto& v : visits) by_user[v.subject].push_back(&v);

    std::vector<pkg::CaseEvent> upto, recent;
    for (const auto& c : d.cases) {
        if (c.t <= at) upto.push_back(c);
        if (c.t <= at && c.t > at - opts.time_window_s) recent.push_back(c);
    }
    std::vector<net::HotspotClass> recent_label(R);
    for (std::size_t i = 0; i < R; ++i) recent_label[i] = net::label_region(recent, d.regions[i], d.regions);

    std::vector<net::RegionSample> out;
    for (std::size_t i = 0; i < R; ++i) {
        const auto& region = d.regions[i];
        net::RegionSample s;
        s.region = region.id;
        s.context.assign(net::ctx::width, 0.0);
        for (std::size_t m = 0; m < sc_now.size(); ++m) s.context[net::ctx::sc_first + m] = sc_now[m];
        s.context[net::ctx::pattern_cascading] = flags[i][0] ? 1.0 : 0.0;
        s.context[net::ctx::pattern_cooccurrence] = flags[i][1] ? 1.0 : 0.0;
        s.context[net::ctx::connectivity] = air[i];
        s.context[net::ctx::population_density] = density[i];
        s.context[net::ctx::literacy] = literacy[i];
        s.context[net::ctx::medical] = medical[i];
        s.context[net::ctx::poi_hospital] = poi[i][0];
        s.context[net::ctx::poi_commercial] = poi[i][1];
        s.context[net::ctx::poi_transit] = poi[i][2];
        double now_visits = 0, before_visits = 0;
        for (const auto& v : visits) {
            if (place_region.at(v.object) != region.id) continue;
            if (v.interval.t1 > at - 7 * kDay) now_visits += 1;
            else if (v.interval.t1 > at - 14 * kDay) before_visits += 1;
        }
        s.context[net::ctx::mobility_delta] = (now_visits - before_visits) / (before_visits + 1.0);
        s.context[net::ctx::aggregate_flow] = flow[i];
        for (std::size_t j = 0; j < R; ++j)
            if (j != i && net::is_hotspot(recent_label[j]) && geo::share_border(region.bbox, d.regions[j].bbox))
                s.context[net::ctx::neighbor_hotspot_14d] = 1.0;
        double near = 0;
        for (const auto& c : recent) {
            const LatLon p = c.location ? *c.location : d.regions[region_index.at(c.region_id)].center();
            if (haversine_m(p, region.center()) <= 1000.0) near += c.count;
        }
        s.context[net::ctx::recent_cases] = std::log1p(near);

        // Location sequence: where the latest visitors of this region came from.
        std::vector<const TemporalFact*> here;
        for (const auto& v : visits)
            if (place_region.at(v.object) == region.id) here.push_back(&v);
        std::sort(here.begin(), here.end(), [](const auto* a, const auto* b) {
            return std::tie(a->interval.t1, a->id) < std::tie(b->interval.t1, b->id);
        });
        const std::size_t take = std::min(opts.steps, here.size());
        for (std::size_t k = 0; k < opts.steps - take; ++k)
            s.steps.push_back({i, weekday(at), hour_of(at), 0, 0.0});
        for (std::size_t k = here.size() - take; k < here.size(); ++k) {
            const TemporalFact* v = here[k];
            std::size_t from = i;
            const auto& mine = by_user[v->subject];
            const auto pos = std::find(mine.begin(), mine.end(), v);
            if (pos != mine.begin()) from = region_index.at(place_region.at((*(pos - 1))->object));
            const double dur = static_cast<double>(v->interval.end_or_max() - v->interval.t1);
            s.steps.push_back({from, weekday(v->interval.t1), hour_of(v->interval.t1), embed::duration_bucket(dur),
                               air[from]});
        }
        s.label = net::label_region(upto, region, d.regions);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<net::RegionSample> synthesize_hotspot_samples(const HotspotDatasetConfig& cfg) {
    require(cfg.samples >= 1 && cfg.steps >= 2 && cfg.locations >= 2, "hotspot dataset config out of range");
    std::mt19937_64 rng(cfg.seed);
    std::vector<bool> risky(cfg.locations, false);
    {
        std::vector<std::size_t> ids(cfg.locations);
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
        for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[pick(rng, i)]);
        for (std::size_t i = 0; i < cfg.locations / 2; ++i) risky[ids[i]] = true;
    }
    std::vector<net::RegionSample> out;
    out.reserve(cfg.samples);
    for (std::size_t n = 0; n < cfg.samples; ++n) {
        net::RegionSample s;
        char id[24];
        std::snprintf(id, sizeof(id), "syn%05zu", n);
        s.region = id;
        s.context.resize(net::ctx::width);
        for (auto& v : s.context) v = uniform01(rng);
        for (std::size_t m = 0; m < net::ctx::sc_count; ++m) {
            const double mag = uniform(rng, 0.05, 1.0);
            s.context[net::ctx::sc_first + m] = uniform01(rng) < 0.5 ? -mag : mag;
        }
        s.context[net::ctx::pattern_cascading] = static_cast<double>(pick(rng, 2));
        s.context[net::ctx::pattern_cooccurrence] = static_cast<double>(pick(rng, 2));
        const std::size_t tau = pick(rng, cfg.steps - 1);
        for (std::size_t t = 0; t < cfg.steps; ++t)
            s.steps.push_back({pick(rng, cfg.locations), pick(rng, embed::kDays), pick(rng, embed::kHours),
                               pick(rng, embed::kDurationBuckets), t == tau ? 1.0 : 0.0});
        const bool spread = s.context[net::ctx::sc_first] > 0;  // shared-border SC
        const bool origin = risky[s.steps[tau].location];
        const bool dest = risky[s.steps[tau + 1].location];
        using net::HotspotClass;
        if (spread)
            s.label = origin ? HotspotClass::c1 : (dest ? HotspotClass::c2 : HotspotClass::c4);
        else
            s.label = dest ? HotspotClass::c3 : HotspotClass::none;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace mobepi::io
