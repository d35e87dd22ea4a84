#include "mobepi/geo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

namespace mobepi::geo {

namespace {

constexpr double kEdgeEps = 1e-9;  // degrees

double meters_per_degree_lon(double lat) { return kMetersPerDegree * std::cos(lat * kPi / 180.0); }

std::size_t cells_along(double extent, double step) {
    // Tolerate rounding so an extent of exactly k cells yields k, not k + 1.
    return static_cast<std::size_t>(std::max(1.0, std::ceil(extent / step - 1e-9)));
}

}  // namespace

BBox BBox::united(const BBox& o) const {
    return {std::min(min_lat, o.min_lat), std::min(min_lon, o.min_lon), std::max(max_lat, o.max_lat),
            std::max(max_lon, o.max_lon)};
}

std::string encode_bbox(const BBox& b) {
    return "bbox:" + format_double(b.min_lat) + ";" + format_double(b.min_lon) + ";" + format_double(b.max_lat) +
           ";" + format_double(b.max_lon);
}

std::optional<BBox> decode_bbox(const std::string& s) {
    if (s.rfind("bbox:", 0) != 0) return std::nullopt;
    const auto parts = split(std::string_view(s).substr(5), ';');
    if (parts.size() != 4) return std::nullopt;
    return BBox{parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2]), parse_double(parts[3])};
}

BBox bbox_from_meters(const LatLon& sw, double height_m, double width_m) {
    const double dlat = height_m / kMetersPerDegree;
    const double lat_c = sw.lat + dlat / 2;
    const double dlon = width_m / meters_per_degree_lon(lat_c);
    return {sw.lat, sw.lon, sw.lat + dlat, sw.lon + dlon};
}

void validate_region(const Region& r) {
    require(!r.id.empty(), "region id must be non-empty");
    require(r.bbox.valid(), "region " + r.id + ": bbox min must be < max on both axes");
    auto nonneg = [&](const std::optional<double>& v, const char* name) {
        require(!v || (std::isfinite(*v) && *v >= 0.0), "region " + r.id + ": " + name + " must be >= 0");
    };
    nonneg(r.population_density, "population_density");
    nonneg(r.medical_facilities, "medical_facilities");
    nonneg(r.aggregate_flow, "aggregate_flow");
    require(!r.literacy_rate || (*r.literacy_rate >= 0.0 && *r.literacy_rate <= 1.0),
            "region " + r.id + ": literacy_rate must lie in [0,1]");
}

const char* to_string(PoiType t) {
    switch (t) {
    case PoiType::airport: return "airport";
    case PoiType::rail_junction: return "rail_junction";
    case PoiType::hospital: return "hospital";
    case PoiType::commercial: return "commercial";
    case PoiType::park: return "park";
    case PoiType::residence: return "residence";
    case PoiType::other: return "other";
    }
    return "other";
}

PoiType parse_poi_type(std::string_view text) {
    for (PoiType t : {PoiType::airport, PoiType::rail_junction, PoiType::hospital, PoiType::commercial,
                      PoiType::park, PoiType::residence, PoiType::other})
        if (text == to_string(t)) return t;
    fail(ErrorKind::parse, "unknown poi_type '" + std::string(text) + "'");
}

Grid::Grid(const BBox& bbox, double cell_size_m) : bbox_(bbox) {
    require(cell_size_m > 0 && std::isfinite(cell_size_m), "cell_size_m must be > 0");
    require(bbox.valid(), "degenerate bbox");
    dlat_ = cell_size_m / kMetersPerDegree;
    dlon_ = cell_size_m / meters_per_degree_lon(bbox.center().lat);
    rows_ = cells_along(bbox.max_lat - bbox.min_lat, dlat_);
    cols_ = cells_along(bbox.max_lon - bbox.min_lon, dlon_);
}

std::optional<std::size_t> Grid::cell_index(const LatLon& p) const {
    if (!bbox_.contains(p)) return std::nullopt;
    auto r = static_cast<std::size_t>(std::floor((p.lat - bbox_.min_lat) / dlat_));
    auto c = static_cast<std::size_t>(std::floor((p.lon - bbox_.min_lon) / dlon_));
    r = std::min(r, rows_ - 1);
    c = std::min(c, cols_ - 1);
    return r * cols_ + c;
}

std::string Grid::cell_id(std::size_t index) const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "r%03zu_c%03zu", index / cols_, index % cols_);
    return buf;
}

BBox Grid::cell_bbox(std::size_t index) const {
    const std::size_t r = index / cols_, c = index % cols_;
    BBox b;
    b.min_lat = bbox_.min_lat + static_cast<double>(r) * dlat_;
    b.min_lon = bbox_.min_lon + static_cast<double>(c) * dlon_;
    b.max_lat = r + 1 == rows_ ? bbox_.max_lat : bbox_.min_lat + static_cast<double>(r + 1) * dlat_;
    b.max_lon = c + 1 == cols_ ? bbox_.max_lon : bbox_.min_lon + static_cast<double>(c + 1) * dlon_;
    return b;
}

std::vector<Region> Grid::regions() const {
    std::vector<Region> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(Region{cell_id(i), cell_bbox(i), {}, {}, {}, {}});
    return out;
}

std::vector<Region> build_grid(const BBox& bbox, double cell_size_m) { return Grid(bbox, cell_size_m).regions(); }

const char* to_string(AdjacencyMetric m) {
    switch (m) {
    case AdjacencyMetric::shared_border: return "shared_border";
    case AdjacencyMetric::direct_route: return "direct_route";
    case AdjacencyMetric::rank_density: return "rank_density";
    case AdjacencyMetric::rank_literacy: return "rank_literacy";
    case AdjacencyMetric::rank_medical: return "rank_medical";
    case AdjacencyMetric::rank_flow: return "rank_flow";
    }
    return "?";
}

AdjacencyMetric parse_metric(std::string_view text) {
    for (AdjacencyMetric m : kAllMetrics)
        if (text == to_string(m)) return m;
    fail(ErrorKind::parse, "unknown adjacency metric '" + std::string(text) + "'");
}

double AdjacencyMatrix::total() const { return std::accumulate(w.begin(), w.end(), 0.0); }

std::size_t AdjacencyMatrix::nonzeros() const {
    return static_cast<std::size_t>(std::count_if(w.begin(), w.end(), [](double v) { return v != 0.0; }));
}

bool share_border(const BBox& a, const BBox& b) {
    auto touch = [](double x, double y) { return std::abs(x - y) <= kEdgeEps; };
    auto overlap = [](double lo1, double hi1, double lo2, double hi2) {
        return std::min(hi1, hi2) - std::max(lo1, lo2) > kEdgeEps;
    };
    const bool lat_edge = touch(a.max_lat, b.min_lat) || touch(b.max_lat, a.min_lat);
    const bool lon_edge = touch(a.max_lon, b.min_lon) || touch(b.max_lon, a.min_lon);
    return (lat_edge && overlap(a.min_lon, a.max_lon, b.min_lon, b.max_lon)) ||
           (lon_edge && overlap(a.min_lat, a.max_lat, b.min_lat, b.max_lat));
}

namespace {

const std::optional<double>& rank_attribute(const Region& r, AdjacencyMetric m) {
    switch (m) {
    case AdjacencyMetric::rank_density: return r.population_density;
    case AdjacencyMetric::rank_literacy: return r.literacy_rate;
    case AdjacencyMetric::rank_medical: return r.medical_facilities;
    default: return r.aggregate_flow;
    }
}

}  // namespace

AdjacencyMatrix adjacency_matrix(const std::vector<Region>& regions, AdjacencyMetric metric,
                                 const std::vector<Route>& routes) {
    require(regions.size() >= 2, "adjacency needs at least 2 regions");
    const std::size_t n = regions.size();
    AdjacencyMatrix adj;
    adj.metric = metric;
    adj.w.assign(n * n, 0.0);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) {
        adj.ids.push_back(regions[i].id);
        require(index.emplace(regions[i].id, i).second, "duplicate region id " + regions[i].id);
    }
    auto link = [&](std::size_t a, std::size_t b) {
        if (a == b) return;
        adj.w[a * n + b] = 1.0;
        adj.w[b * n + a] = 1.0;
    };

    switch (metric) {
    case AdjacencyMetric::shared_border:
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                if (share_border(regions[a].bbox, regions[b].bbox)) link(a, b);
        break;
    case AdjacencyMetric::direct_route:
        for (const Route& r : routes) {
            if (r.route_count <= 0) continue;
            auto s = index.find(r.src_id), d = index.find(r.dst_id);
            if (s == index.end() || d == index.end())
                fail(ErrorKind::not_found, "route references unknown region " + r.src_id + " -> " + r.dst_id);
            link(s->second, d->second);
        }
        break;
    default: {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        for (const Region& r : regions)
            require(rank_attribute(r, metric).has_value(),
                    std::string("region ") + r.id + " lacks the attribute for " + to_string(metric));
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double va = *rank_attribute(regions[a], metric), vb = *rank_attribute(regions[b], metric);
            if (va != vb) return va < vb;
            return regions[a].id < regions[b].id;
        });
        for (std::size_t k = 0; k + 1 < n; ++k) link(order[k], order[k + 1]);
    }
    }
    return adj;
}

std::vector<std::string> places_within(const std::vector<Place>& places, const LatLon& at, double radius_m) {
    std::vector<std::string> out;
    for (const Place& p : places)
        if (haversine_m(p.location, at) <= radius_m) out.push_back(p.id);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<ConnectivityIndex> connectivity_indices(const std::vector<TemporalFact>& facts, const Interval& window) {
    require(window.valid(), "connectivity window has t1 > t2");
    std::map<std::string, ConnectivityIndex> acc;
    auto entry = [&](const std::string& id) -> ConnectivityIndex& {
        auto& e = acc[id];
        e.place_id = id;
        e.window = window;
        return e;
    };
    for (const TemporalFact& f : facts) {
        if (!f.interval.overlaps(window)) continue;
        if (f.relation == Relation::connectivity || f.relation == Relation::connected_by) {
            entry(f.subject).routes += f.feature;
            entry(f.object).routes += f.feature;
        } else if (f.relation == Relation::flow) {
            entry(f.subject).outflow += f.feature;
            entry(f.object).inflow += f.feature;
        }
    }
    double max_product = 0.0;
    for (auto& [id, e] : acc) max_product = std::max(max_product, e.routes * (e.inflow + e.outflow));
    std::vector<ConnectivityIndex> out;
    out.reserve(acc.size());
    for (auto& [id, e] : acc) {
        e.ci = max_product > 0.0 ? e.routes * (e.inflow + e.outflow) / max_product : 0.0;
        out.push_back(e);
    }
    return out;
}

ConnectivityIndex connectivity_index(const std::string& place, const std::vector<TemporalFact>& facts,
                                     const Interval& window) {
    for (const auto& e : connectivity_indices(facts, window))
        if (e.place_id == place) return e;
    ConnectivityIndex zero;
    zero.place_id = place;
    zero.window = window;
    return zero;
}

}  // namespace mobepi::geo
