#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mobepi/common.hpp"
#include "mobepi/fact.hpp"

namespace mobepi::geo {

/// Lat/lon rectangle in degrees.
struct BBox {
    double min_lat = 0, min_lon = 0, max_lat = 0, max_lon = 0;

    bool valid() const { return min_lat < max_lat && min_lon < max_lon; }
    bool contains(const LatLon& p) const {
        return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
    }
    LatLon center() const { return {(min_lat + max_lat) / 2, (min_lon + max_lon) / 2}; }
    BBox united(const BBox& o) const;

    friend bool operator==(const BBox&, const BBox&) = default;
};

/// "bbox:minlat;minlon;maxlat;maxlon"
std::string encode_bbox(const BBox& b);
std::optional<BBox> decode_bbox(const std::string& s);

/// Rectangle of the given metric size anchored at its south-west corner,
/// converted with the centroid-latitude approximation used by the grid.
BBox bbox_from_meters(const LatLon& south_west, double height_m, double width_m);

struct Region {
    std::string id;
    BBox bbox;
    std::optional<double> population_density;  // people per km^2
    std::optional<double> literacy_rate;       // [0,1]
    std::optional<double> medical_facilities;
    std::optional<double> aggregate_flow;      // trips per day

    LatLon center() const { return bbox.center(); }
};

void validate_region(const Region& r);

enum class PoiType { airport, rail_junction, hospital, commercial, park, residence, other };
const char* to_string(PoiType t);
PoiType parse_poi_type(std::string_view text);

struct DailyHours {
    int open_s = 0;   // seconds after local midnight
    int close_s = 0;
};

struct Place {
    std::string id;
    PoiType poi_type = PoiType::other;
    LatLon location;
    double area_m2 = 0.0;
    std::optional<DailyHours> opening_hours;
    std::string region_id;  // filled at load time
};

/// Axis-aligned grid over a bbox; cell metric size converted at the centroid latitude.
class Grid {
public:
    Grid(const BBox& bbox, double cell_size_m);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return rows_ * cols_; }
    const BBox& bbox() const { return bbox_; }

    /// Cells are half-open [lo, hi) except the last row/column, which also
    /// takes the bbox's max edge, so every point in the bbox maps to one cell.
    std::optional<std::size_t> cell_index(const LatLon& p) const;
    std::string cell_id(std::size_t index) const;
    BBox cell_bbox(std::size_t index) const;
    std::vector<Region> regions() const;

private:
    BBox bbox_;
    double dlat_ = 0, dlon_ = 0;
    std::size_t rows_ = 0, cols_ = 0;
};

std::vector<Region> build_grid(const BBox& bbox, double cell_size_m);

enum class AdjacencyMetric { shared_border, direct_route, rank_density, rank_literacy, rank_medical, rank_flow };

inline constexpr std::array<AdjacencyMetric, 6> kAllMetrics = {
    AdjacencyMetric::shared_border, AdjacencyMetric::direct_route, AdjacencyMetric::rank_density,
    AdjacencyMetric::rank_literacy, AdjacencyMetric::rank_medical, AdjacencyMetric::rank_flow};

const char* to_string(AdjacencyMetric m);
AdjacencyMetric parse_metric(std::string_view text);

struct Route {
    std::string src_id;
    std::string dst_id;
    int route_count = 0;
};

/// Dense binary n x n weights in region order.
struct AdjacencyMatrix {
    AdjacencyMetric metric = AdjacencyMetric::shared_border;
    std::vector<std::string> ids;
    std::vector<double> w;  // row-major

    std::size_t n() const { return ids.size(); }
    double at(std::size_t a, std::size_t b) const { return w[a * ids.size() + b]; }
    double total() const;
    std::size_t nonzeros() const;
};

/// Rank metrics sort by (attribute, id) and link each region to its
/// predecessor and successor. Missing attribute on any region is an error.
AdjacencyMatrix adjacency_matrix(const std::vector<Region>& regions, AdjacencyMetric metric,
                                 const std::vector<Route>& routes = {});

/// Rook adjacency by bbox edges sharing a segment of positive length.
bool share_border(const BBox& a, const BBox& b);

/// Places within radius_m of a location (distance-based neighborhood).
std::vector<std::string> places_within(const std::vector<Place>& places, const LatLon& at, double radius_m);

struct ConnectivityIndex {
    std::string place_id;
    Interval window;
    double routes = 0;
    double inflow = 0;
    double outflow = 0;
    double ci = 0;
};

/// routes x (inflow + outflow), normalized by the maximum over all places seen
/// in the window. Routes come from connectivity facts touching the place;
/// inflow/outflow from flow facts ending/starting there.
std::vector<ConnectivityIndex> connectivity_indices(const std::vector<TemporalFact>& facts, const Interval& window);
ConnectivityIndex connectivity_index(const std::string& place, const std::vector<TemporalFact>& facts,
                                     const Interval& window);

}  // namespace mobepi::geo
