#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mobepi/geo.hpp"
#include "mobepi/hotspot_net.hpp"
#include "mobepi/patterns.hpp"
#include "mobepi/pkg.hpp"
#include "mobepi/spatial_stats.hpp"

namespace mobepi::io {

struct Dataset {
    std::vector<geo::Region> regions;  // sorted by id
    std::vector<geo::Place> places;    // sorted by id, region_id filled
    std::vector<pkg::User> users;      // sorted by id
    std::vector<pkg::CaseEvent> cases;
    std::vector<geo::Route> routes;
    std::vector<patterns::RegionContext> contexts;
};

/// File names inside a dataset directory. Only regions.geojson is mandatory.
inline constexpr const char* kRegionsFile = "regions.geojson";
inline constexpr const char* kPlacesFile = "places.csv";
inline constexpr const char* kUsersFile = "users.csv";
inline constexpr const char* kTrajectoriesFile = "trajectories.csv";
inline constexpr const char* kCasesFile = "cases.csv";
inline constexpr const char* kRoutesFile = "routes.csv";
inline constexpr const char* kContextsFile = "contexts.csv";

// Parsers take the text and the name used in error messages ("file:line: ...").

std::vector<geo::Region> parse_regions_geojson(const std::string& text, const std::string& source);
std::vector<geo::Place> parse_places_csv(const std::string& text, const std::string& source);
std::vector<pkg::User> parse_users_csv(const std::string& text, const std::string& source);
/// Adds samples to users (created on first sight), then sorts each trajectory.
void parse_trajectories_csv(const std::string& text, const std::string& source, std::vector<pkg::User>& users);
std::vector<pkg::CaseEvent> parse_cases_csv(const std::string& text, const std::string& source);
std::vector<geo::Route> parse_routes_csv(const std::string& text, const std::string& source);
std::vector<patterns::RegionContext> parse_contexts_csv(const std::string& text, const std::string& source,
                                                        const std::vector<geo::Region>& regions);

std::string format_regions_geojson(const std::vector<geo::Region>& regions);
std::string format_places_csv(const std::vector<geo::Place>& places);
std::string format_users_csv(const std::vector<pkg::User>& users);
std::string format_trajectories_csv(const std::vector<pkg::User>& users);
std::string format_cases_csv(const std::vector<pkg::CaseEvent>& cases);
std::string format_routes_csv(const std::vector<geo::Route>& routes);
std::string format_contexts_csv(const std::vector<patterns::RegionContext>& contexts);

/// Loads every present file of the directory and enforces referential
/// integrity: places inside a region, cases/routes/users naming known regions.
Dataset load_dataset(const std::string& dir);
void save_dataset(const Dataset& d, const std::string& dir);
/// Assigns places to regions and checks every cross reference.
void link_dataset(Dataset& d);

// PKG persistence: "#mobepi pkg v1", a column header, then one
// `subject,relation,object,t1,t2,feature` line per fact ordered by (t1, id).

std::string format_pkg(const pkg::PkgStore& store);
pkg::PkgStore parse_pkg(const std::string& text, const std::string& source);
void save_pkg(const pkg::PkgStore& store, const std::string& path);
pkg::PkgStore load_pkg(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);
bool file_exists(const std::string& path);

// ---------------------------------------------------------------------------
// Synthetic scenario with planted ground truth

struct ScenarioConfig {
    std::uint64_t seed = 7;
    std::size_t grid_rows = 5;
    std::size_t grid_cols = 5;
    double cell_size_m = 1000.0;
    double origin_lat = 22.5;
    double origin_lon = 88.3;
    std::size_t background_users = 16;
    std::size_t days = 3;
    std::size_t weeks_of_cases = 4;
    Timestamp start = 1583020800;  // 2020-03-01 00:00 UTC
    Timestamp sample_period_s = 300;
    // Planted structures.
    std::size_t flow_users = 5;
    std::size_t group_users = 2;
    int c1_cases = 25;  // within 300 m of the C1 region centre
    int c2_cases = 60;  // 550-750 m from the C2 region centre
};

void validate(const ScenarioConfig& cfg);

struct PlantedTruth {
    std::vector<std::string> c1_regions;
    std::vector<std::string> c2_regions;
    std::string flow_from, flow_to;
    std::vector<std::string> flow_users;
    Timestamp flow_slot = 0;
    std::vector<std::string> group_users;
    std::vector<std::string> group_places;
    std::vector<std::string> cascading_pattern;
    std::vector<std::string> cooccurrence_pattern;
};

struct Scenario {
    ScenarioConfig config;
    Dataset data;
    PlantedTruth truth;
};

/// Deterministic per seed. Background users follow a home/POI Markov walk over
/// non-reserved places; the flow, the group and the hotspots are planted on
/// reserved places/regions and checked against the labelling rules.
Scenario synthesize_scenario(const ScenarioConfig& cfg);

std::string truth_json(const PlantedTruth& t);

struct CatalogEntry {
    std::string dataset_id;
    std::string provider;
    std::string schema;
    geo::BBox coverage;
    Timestamp t_begin = 0;
    Timestamp t_end = 0;
    std::string uri;  // relative to the dataset directory
};

std::vector<CatalogEntry> make_catalog(const Dataset& d, const std::string& provider);
std::string catalog_json(const std::vector<CatalogEntry>& entries);
std::vector<CatalogEntry> parse_catalog_json(const std::string& text);

/// Writes the dataset files, truth.json and catalog.json.
void write_scenario(const Scenario& s, const std::string& dir);

// ---------------------------------------------------------------------------
// Samples for the hotspot classifier

struct SampleOptions {
    std::size_t steps = 8;
    Timestamp time_window_s = 14 * 24 * 3600;
    double stay_radius_m = 100.0;
};

/// One sample per region at `at`: the regions most recently left by people who
/// then visited the region form the location sequence; the context vector is
/// filled from SC results, mined patterns, region attributes and recent cases.
/// Labels come from label_region over cases up to `at`.
std::vector<net::RegionSample> build_region_samples(const Dataset& d, const pkg::PkgStore& store,
                                                    const std::vector<stats::ScResult>& sc,
                                                    const std::vector<patterns::PatternInstance>& patterns,
                                                    Timestamp at, const SampleOptions& opts);

/// Labels are a fixed function of planted features (see the README):
/// SC sign, the risk of the location at the air-travel step and of the next one.
struct HotspotDatasetConfig {
    std::uint64_t seed = 11;
    std::size_t samples = 2000;
    std::size_t steps = 8;
    std::size_t locations = 20;
};

std::vector<net::RegionSample> synthesize_hotspot_samples(const HotspotDatasetConfig& cfg);

}  // namespace mobepi::io
