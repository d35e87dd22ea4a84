#include "mobepi/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mobepi::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::io, "cannot read " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::io, "cannot write " + path);
    os << text;
    if (!os) fail(ErrorKind::io, "failed writing " + path);
}

bool file_exists(const std::string& path) { return fs::exists(path); }

namespace {

struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

/// "#mobepi <kind> v1", the column header, then rows. An empty text has no rows.
std::vector<Row> read_table(const std::string& text, const std::string& source, const std::string& kind,
                            const std::string& columns) {
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    int stage = 0;
    std::vector<Row> rows;
    while (std::getline(is, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty()) continue;
        const auto where = source + ":" + std::to_string(lineno) + ": ";
        if (stage == 0) {
            if (t != "#mobepi " + kind + " v1")
                fail(ErrorKind::parse, where + "expected version header '#mobepi " + kind + " v1'");
            stage = 1;
        } else if (stage == 1) {
            if (t != columns) fail(ErrorKind::parse, where + "expected column header '" + columns + "'");
            stage = 2;
        } else {
            rows.push_back({lineno, split(t, ',')});
        }
    }
    return rows;
}

std::string table_head(const std::string& kind, const std::string& columns) {
    return "#mobepi " + kind + " v1\n" + columns + "\n";
}

[[noreturn]] void row_error(const std::string& source, const Row& r, const std::string& what,
                            ErrorKind kind = ErrorKind::parse) {
    fail(kind, source + ":" + std::to_string(r.line) + ": " + what);
}

void expect_fields(const std::string& source, const Row& r, std::initializer_list<std::size_t> counts) {
    for (auto c : counts)
        if (r.fields.size() == c) return;
    row_error(source, r, "unexpected number of fields (" + std::to_string(r.fields.size()) + ")");
}

template <class F>
auto at_row(const std::string& source, const Row& r, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        row_error(source, r, e.what(), e.kind());
    }
}

std::optional<double> optional_double(const std::string& s) {
    if (trim(s).empty()) return std::nullopt;
    return parse_double(s);
}

constexpr const char* kPlaceColumns = "id,poi_type,lat,lon,area_m2,open_s,close_s";
constexpr const char* kUserColumns = "id,age,gender,residence_region,health_profile";
constexpr const char* kTrajectoryColumns = "user_id,timestamp,lat,lon";
constexpr const char* kCaseColumns = "region_id,timestamp,count,lat,lon";
constexpr const char* kRouteColumns = "src_id,dst_id,route_count";
constexpr const char* kContextColumns = "region_id,timestamp,context";
constexpr const char* kPkgColumns = "subject,relation,object,t1,t2,feature";

void check_latlon(const LatLon& p) {
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || p.lat < -90 || p.lat > 90 || p.lon < -180 || p.lon > 180)
        fail(ErrorKind::invalid_input, "coordinates out of range");
}

}  // namespace

std::vector<geo::Region> parse_regions_geojson(const std::string& text, const std::string& source) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, source + ": " + e.what());
    }
    if (!j.is_object() || j.value("type", "") != "FeatureCollection")
        fail(ErrorKind::parse, source + ": expected a GeoJSON FeatureCollection");
    if (!j.contains("mobepi_version") || j["mobepi_version"] != 1)
        fail(ErrorKind::parse, source + ": missing or unsupported mobepi_version (expected 1)");
    std::vector<geo::Region> out;
    std::set<std::string> ids;
    std::size_t k = 0;
    for (const auto& f : j.at("features")) {
        const auto where = source + ": feature " + std::to_string(k++) + ": ";
        try {
            const auto& props = f.at("properties");
            geo::Region r;
            r.id = props.at("id").get<std::string>();
            auto attr = [&](const char* key) -> std::optional<double> {
                if (!props.contains(key) || props[key].is_null()) return std::nullopt;
                return props[key].get<double>();
            };
            r.population_density = attr("population_density");
            r.literacy_rate = attr("literacy_rate");
            r.medical_facilities = attr("medical_facilities");
            r.aggregate_flow = attr("aggregate_flow");
            const auto& g = f.at("geometry");
            const std::string type = g.at("type").get<std::string>();
            std::vector<json> rings;
            if (type == "Polygon") {
                for (const auto& ring : g.at("coordinates")) rings.push_back(ring);
            } else if (type == "MultiPolygon") {
                for (const auto& poly : g.at("coordinates"))
                    for (const auto& ring : poly) rings.push_back(ring);
            } else {
                fail(ErrorKind::parse, "unsupported geometry type " + type);
            }
            bool first = true;
            for (const auto& ring : rings)
                for (const auto& pt : ring) {
                    const double lon = pt.at(0).get<double>(), lat = pt.at(1).get<double>();
                    check_latlon({lat, lon});
                    if (first) {
                        r.bbox = {lat, lon, lat, lon};
                        first = false;
                    }
                    r.bbox.min_lat = std::min(r.bbox.min_lat, lat);
                    r.bbox.max_lat = std::max(r.bbox.max_lat, lat);
                    r.bbox.min_lon = std::min(r.bbox.min_lon, lon);
                    r.bbox.max_lon = std::max(r.bbox.max_lon, lon);
                }
            geo::validate_region(r);
            if (!ids.insert(r.id).second) fail(ErrorKind::invalid_input, "duplicate region id " + r.id);
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            fail(ErrorKind::parse, where + e.what());
        } catch (const Error& e) {
            fail(e.kind(), where + e.what());
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
}

std::string format_regions_geojson(const std::vector<geo::Region>& regions) {
    json features = json::array();
    for (const auto& r : regions) {
        json props = {{"id", r.id}};
        auto put = [&](const char* key, const std::optional<double>& v) {
            if (v) props[key] = *v;
        };
        put("population_density", r.population_density);
        put("literacy_rate", r.literacy_rate);
        put("medical_facilities", r.medical_facilities);
        put("aggregate_flow", r.aggregate_flow);
        const auto& b = r.bbox;
        json ring = json::array({json::array({b.min_lon, b.min_lat}), json::array({b.max_lon, b.min_lat}),
                                 json::array({b.max_lon, b.max_lat}), json::array({b.min_lon, b.max_lat}),
                                 json::array({b.min_lon, b.min_lat})});
        features.push_back({{"type", "Feature"},
                            {"properties", props},
                            {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({ring})}}}});
    }
    json j = {{"type", "FeatureCollection"}, {"mobepi_version", 1}, {"features", features}};
    return j.dump(1) + "\n";
}

std::vector<geo::Place> parse_places_csv(const std::string& text, const std::string& source) {
    std::vector<geo::Place> out;
    std::set<std::string> ids;
    for (const auto& r : read_table(text, source, "places", kPlaceColumns)) {
        expect_fields(source, r, {7});
        out.push_back(at_row(source, r, [&] {
            geo::Place p;
            p.id = std::string(trim(r.fields[0]));
            require(!p.id.empty(), "empty place id");
            p.poi_type = geo::parse_poi_type(trim(r.fields[1]));
            p.location = {parse_double(r.fields[2]), parse_double(r.fields[3])};
            check_latlon(p.location);
            p.area_m2 = parse_double(r.fields[4]);
            require(p.area_m2 >= 0, "negative area");
            const bool has_open = !trim(r.fields[5]).empty(), has_close = !trim(r.fields[6]).empty();
            require(has_open == has_close, "opening hours need both open_s and close_s");
            if (has_open)
                p.opening_hours = geo::DailyHours{static_cast<int>(parse_int(r.fields[5])),
                                                  static_cast<int>(parse_int(r.fields[6]))};
            if (!ids.insert(p.id).second) fail(ErrorKind::invalid_input, "duplicate place id " + p.id);
            return p;
        }));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
}

std::string format_places_csv(const std::vector<geo::Place>& places) {
    std::string s = table_head("places", kPlaceColumns);
    for (const auto& p : places) {
        s += p.id + "," + geo::to_string(p.poi_type) + "," + format_double(p.location.lat) + "," +
             format_double(p.location.lon) + "," + format_double(p.area_m2) + ",";
        if (p.opening_hours)
            s += std::to_string(p.opening_hours->open_s) + "," + std::to_string(p.opening_hours->close_s);
        else
            s += ",";
        s += "\n";
    }
    return s;
}

std::vector<pkg::User> parse_users_csv(const std::string& text, const std::string& source) {
    std::vector<pkg::User> out;
    std::set<std::string> ids;
    for (const auto& r : read_table(text, source, "users", kUserColumns)) {
        expect_fields(source, r, {5});
        out.push_back(at_row(source, r, [&] {
            pkg::User u;
            u.id = std::string(trim(r.fields[0]));
            require(!u.id.empty(), "empty user id");
            u.age = static_cast<int>(parse_int(r.fields[1]));
            u.gender = std::string(trim(r.fields[2]));
            u.residence_region = std::string(trim(r.fields[3]));
            u.health_profile = std::string(trim(r.fields[4]));
            if (!ids.insert(u.id).second) fail(ErrorKind::invalid_input, "duplicate user id " + u.id);
            return u;
        }));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
}

std::string format_users_csv(const std::vector<pkg::User>& users) {
    std::string s = table_head("users", kUserColumns);
    for (const auto& u : users)
        s += u.id + "," + std::to_string(u.age) + "," + u.gender + "," + u.residence_region + "," + u.health_profile +
             "\n";
    return s;
}

void parse_trajectories_csv(const std::string& text, const std::string& source, std::vector<pkg::User>& users) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < users.size(); ++i) index[users[i].id] = i;
    std::map<std::pair<std::string, Timestamp>, std::size_t> seen;
    for (const auto& r : read_table(text, source, "trajectories", kTrajectoryColumns)) {
        expect_fields(source, r, {4});
        const std::string id(trim(r.fields[0]));
        if (id.empty()) row_error(source, r, "empty user id");
        const auto sample = at_row(source, r, [&] {
            pkg::TrajectorySample s;
            s.t = parse_int(r.fields[1]);
            s.at = {parse_double(r.fields[2]), parse_double(r.fields[3])};
            check_latlon(s.at);
            return s;
        });
        const auto [it, fresh] = seen.emplace(std::make_pair(id, sample.t), r.line);
        if (!fresh)
            row_error(source, r, "duplicate timestamp for user " + id + " (first at line " +
                                     std::to_string(it->second) + ")",
                      ErrorKind::invalid_input);
        auto u = index.find(id);
        if (u == index.end()) {
            pkg::User fresh_user;
            fresh_user.id = id;
            users.push_back(fresh_user);
            u = index.emplace(id, users.size() - 1).first;
        }
        users[u->second].trajectory.push_back(sample);
    }
    for (auto& u : users)
        std::sort(u.trajectory.begin(), u.trajectory.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    std::sort(users.begin(), users.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
}

std::string format_trajectories_csv(const std::vector<pkg::User>& users) {
    std::string s = table_head("trajectories", kTrajectoryColumns);
    for (const auto& u : users)
        for (const auto& p : u.trajectory)
            s += u.id + "," + std::to_string(p.t) + "," + format_double(p.at.lat) + "," + format_double(p.at.lon) +
                 "\n";
    return s;
}

std::vector<pkg::CaseEvent> parse_cases_csv(const std::string& text, const std::string& source) {
    std::vector<pkg::CaseEvent> out;
    for (const auto& r : read_table(text, source, "cases", kCaseColumns)) {
        expect_fields(source, r, {3, 5});
        out.push_back(at_row(source, r, [&] {
            pkg::CaseEvent c;
            c.region_id = std::string(trim(r.fields[0]));
            require(!c.region_id.empty(), "empty region id");
            c.t = parse_int(r.fields[1]);
            c.count = static_cast<int>(parse_int(r.fields[2]));
            require(c.count >= 0, "negative case count");
            if (r.fields.size() == 5) {
                const auto lat = optional_double(r.fields[3]), lon = optional_double(r.fields[4]);
                require(lat.has_value() == lon.has_value(), "case location needs both lat and lon");
                if (lat) {
                    c.location = LatLon{*lat, *lon};
                    check_latlon(*c.location);
                }
            }
            return c;
        }));
    }
    return out;
}

std::string format_cases_csv(const std::vector<pkg::CaseEvent>& cases) {
    std::string s = table_head("cases", kCaseColumns);
    for (const auto& c : cases) {
        s += c.region_id + "," + std::to_string(c.t) + "," + std::to_string(c.count) + ",";
        if (c.location)
            s += format_double(c.location->lat) + "," + format_double(c.location->lon);
        else
            s += ",";
        s += "\n";
    }
    return s;
}

std::vector<geo::Route> parse_routes_csv(const std::string& text, const std::string& source) {
    std::vector<geo::Route> out;
    for (const auto& r : read_table(text, source, "routes", kRouteColumns)) {
        expect_fields(source, r, {3});
        out.push_back(at_row(source, r, [&] {
            geo::Route route{std::string(trim(r.fields[0])), std::string(trim(r.fields[1])),
                             static_cast<int>(parse_int(r.fields[2]))};
            require(!route.src_id.empty() && !route.dst_id.empty(), "empty region id");
            require(route.route_count >= 0, "negative route count");
            return route;
        }));
    }
    return out;
}

std::string format_routes_csv(const std::vector<geo::Route>& routes) {
    std::string s = table_head("routes", kRouteColumns);
    for (const auto& r : routes) s += r.src_id + "," + r.dst_id + "," + std::to_string(r.route_count) + "\n";
    return s;
}

std::vector<patterns::RegionContext> parse_contexts_csv(const std::string& text, const std::string& source,
                                                        const std::vector<geo::Region>& regions) {
    std::map<std::string, const geo::Region*> by_id;
    for (const auto& r : regions) by_id[r.id] = &r;
    std::map<std::pair<std::string, Timestamp>, std::vector<std::string>> grouped;
    for (const auto& r : read_table(text, source, "contexts", kContextColumns)) {
        expect_fields(source, r, {3});
        const std::string region(trim(r.fields[0]));
        if (!by_id.count(region)) row_error(source, r, "unknown region " + region, ErrorKind::not_found);
        const Timestamp t = at_row(source, r, [&] { return parse_int(r.fields[1]); });
        const std::string name(trim(r.fields[2]));
        if (name.empty()) row_error(source, r, "empty context name");
        grouped[{region, t}].push_back(name);
    }
    std::vector<patterns::RegionContext> out;
    for (auto& [key, names] : grouped) {
        std::sort(names.begin(), names.end());
        names.erase(std::unique(names.begin(), names.end()), names.end());
        out.push_back({key.first, by_id[key.first]->center(), key.second, names});
    }
    return out;
}

std::string format_contexts_csv(const std::vector<patterns::RegionContext>& contexts) {
    std::string s = table_head("contexts", kContextColumns);
    for (const auto& c : contexts)
        for (const auto& name : c.active) s += c.region_id + "," + std::to_string(c.t) + "," + name + "\n";
    return s;
}

void link_dataset(Dataset& d) {
    std::sort(d.regions.begin(), d.regions.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::set<std::string> region_ids;
    for (const auto& r : d.regions)
        if (!region_ids.insert(r.id).second) fail(ErrorKind::invalid_input, "duplicate region id " + r.id);
    auto known = [&](const std::string& id, const std::string& who) {
        if (!region_ids.count(id)) fail(ErrorKind::not_found, who + " references unknown region " + id);
    };
    for (auto& p : d.places) {
        p.region_id.clear();
        for (const auto& r : d.regions)
            if (r.bbox.contains(p.location)) {
                p.region_id = r.id;
                break;
            }
        if (p.region_id.empty()) fail(ErrorKind::not_found, "place " + p.id + " lies outside every region");
    }
    for (const auto& c : d.cases) known(c.region_id, "case at t=" + std::to_string(c.t));
    for (const auto& r : d.routes) {
        known(r.src_id, "route " + r.src_id + "->" + r.dst_id);
        known(r.dst_id, "route " + r.src_id + "->" + r.dst_id);
    }
    for (const auto& u : d.users) {
        if (!u.residence_region.empty()) known(u.residence_region, "user " + u.id);
        pkg::validate_user(u);
    }
    for (const auto& c : d.contexts) known(c.region_id, "context");
}

Dataset load_dataset(const std::string& dir) {
    Dataset d;
    const auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };
    d.regions = parse_regions_geojson(read_file(path(kRegionsFile)), path(kRegionsFile));
    if (file_exists(path(kPlacesFile))) d.places = parse_places_csv(read_file(path(kPlacesFile)), path(kPlacesFile));
    if (file_exists(path(kUsersFile))) d.users = parse_users_csv(read_file(path(kUsersFile)), path(kUsersFile));
    if (file_exists(path(kTrajectoriesFile)))
        parse_trajectories_csv(read_file(path(kTrajectoriesFile)), path(kTrajectoriesFile), d.users);
    if (file_exists(path(kCasesFile))) d.cases = parse_cases_csv(read_file(path(kCasesFile)), path(kCasesFile));
    if (file_exists(path(kRoutesFile))) d.routes = parse_routes_csv(read_file(path(kRoutesFile)), path(kRoutesFile));
    if (file_exists(path(kContextsFile)))
        d.contexts = parse_contexts_csv(read_file(path(kContextsFile)), path(kContextsFile), d.regions);
    link_dataset(d);
    return d;
}

void save_dataset(const Dataset& d, const std::string& dir) {
    fs::create_directories(dir);
    const auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };
    write_file(path(kRegionsFile), format_regions_geojson(d.regions));
    write_file(path(kPlacesFile), format_places_csv(d.places));
    write_file(path(kUsersFile), format_users_csv(d.users));
    write_file(path(kTrajectoriesFile), format_trajectories_csv(d.users));
    write_file(path(kCasesFile), format_cases_csv(d.cases));
    write_file(path(kRoutesFile), format_routes_csv(d.routes));
    write_file(path(kContextsFile), format_contexts_csv(d.contexts));
}

std::string format_pkg(const pkg::PkgStore& store) {
    std::string s = table_head("pkg", kPkgColumns);
    for (const auto& f : store.facts()) {
        s += f.subject + "," + to_string(f.relation) + "," + f.object + "," + std::to_string(f.interval.t1) + "," +
             (f.interval.t2 ? std::to_string(*f.interval.t2) : std::string("-")) + "," + format_double(f.feature) +
             "\n";
    }
    return s;
}

pkg::PkgStore parse_pkg(const std::string& text, const std::string& source) {
    pkg::PkgStore store;
    if (trim(text).empty()) fail(ErrorKind::parse, source + ": missing '#mobepi pkg v1' header");
    for (const auto& r : read_table(text, source, "pkg", kPkgColumns)) {
        expect_fields(source, r, {6});
        at_row(source, r, [&] {
            const auto& f = r.fields;
            const Timestamp t1 = parse_int(f[3]);
            const Interval iv = trim(f[4]) == "-" ? Interval::open(t1) : Interval::closed(t1, parse_int(f[4]));
            store.assert_fact(make_fact(std::string(trim(f[0])), parse_relation(trim(f[1])), std::string(trim(f[2])),
                                        iv, parse_double(f[5])));
            return 0;
        });
    }
    return store;
}

void save_pkg(const pkg::PkgStore& store, const std::string& path) { write_file(path, format_pkg(store)); }

pkg::PkgStore load_pkg(const std::string& path) { return parse_pkg(read_file(path), path); }

std::vector<CatalogEntry> make_catalog(const Dataset& d, const std::string& provider) {
    geo::BBox cover = d.regions.empty() ? geo::BBox{} : d.regions.front().bbox;
    for (const auto& r : d.regions) cover = cover.united(r.bbox);
    auto span = [](auto begin, auto end) {
        std::pair<Timestamp, Timestamp> s{0, 0};
        bool first = true;
        for (auto it = begin; it != end; ++it) {
            if (first) s = {*it, *it};
            s.first = std::min(s.first, *it);
            s.second = std::max(s.second, *it);
            first = false;
        }
        return s;
    };
    std::vector<Timestamp> traj_t, case_t, ctx_t;
    for (const auto& u : d.users)
        for (const auto& p : u.trajectory) traj_t.push_back(p.t);
    for (const auto& c : d.cases) case_t.push_back(c.t);
    for (const auto& c : d.contexts) ctx_t.push_back(c.t);
    const auto ts = span(traj_t.begin(), traj_t.end());
    const auto cs = span(case_t.begin(), case_t.end());
    const auto xs = span(ctx_t.begin(), ctx_t.end());
    return {
        {"regions", provider, "mobepi-regions-geojson-v1", cover, 0, 0, kRegionsFile},
        {"places", provider, "mobepi-places-v1", cover, 0, 0, kPlacesFile},
        {"users", provider, "mobepi-users-v1", cover, 0, 0, kUsersFile},
        {"trajectories", provider, "mobepi-trajectories-v1", cover, ts.first, ts.second, kTrajectoriesFile},
        {"cases", provider, "mobepi-cases-v1", cover, cs.first, cs.second, kCasesFile},
        {"routes", provider, "mobepi-routes-v1", cover, 0, 0, kRoutesFile},
        {"contexts", provider, "mobepi-contexts-v1", cover, xs.first, xs.second, kContextsFile},
    };
}

std::string catalog_json(const std::vector<CatalogEntry>& entries) {
    json arr = json::array();
    for (const auto& e : entries)
        arr.push_back({{"dataset_id", e.dataset_id},
                       {"provider", e.provider},
                       {"schema", e.schema},
                       {"coverage_bbox", {e.coverage.min_lat, e.coverage.min_lon, e.coverage.max_lat, e.coverage.max_lon}},
                       {"time_span", {e.t_begin, e.t_end}},
                       {"uri", e.uri}});
    return arr.dump(1) + "\n";
}

std::vector<CatalogEntry> parse_catalog_json(const std::string& text) {
    std::vector<CatalogEntry> out;
    try {
        for (const auto& j : json::parse(text)) {
            CatalogEntry e;
            e.dataset_id = j.at("dataset_id").get<std::string>();
            e.provider = j.at("provider").get<std::string>();
            e.schema = j.at("schema").get<std::string>();
            const auto b = j.at("coverage_bbox").get<std::vector<double>>();
            if (b.size() != 4) fail(ErrorKind::parse, "catalog coverage_bbox needs 4 numbers");
            e.coverage = {b[0], b[1], b[2], b[3]};
            const auto t = j.at("time_span").get<std::vector<Timestamp>>();
            if (t.size() != 2) fail(ErrorKind::parse, "catalog time_span needs 2 numbers");
            e.t_begin = t[0];
            e.t_end = t[1];
            e.uri = j.at("uri").get<std::string>();
            out.push_back(e);
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("catalog: ") + e.what());
    }
    return out;
}

}  // namespace mobepi::io
