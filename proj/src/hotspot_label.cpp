#include "mobepi/hotspot_label.hpp"

#include "mobepi/pkg.hpp"

namespace mobepi::net {

const char* to_string(HotspotClass c) {
    switch (c) {
    case HotspotClass::c1: return "C1";
    case HotspotClass::c2: return "C2";
    case HotspotClass::c3: return "C3";
    case HotspotClass::c4: return "C4";
    case HotspotClass::none: return "NONE";
    }
    return "NONE";
}

HotspotClass parse_class(std::string_view text) {
    for (auto c : {HotspotClass::c1, HotspotClass::c2, HotspotClass::c3, HotspotClass::c4, HotspotClass::none})
        if (text == to_string(c)) return c;
    fail(ErrorKind::parse, "unknown hotspot class '" + std::string(text) + "'");
}

CaseCounts count_cases_near(const std::vector<pkg::CaseEvent>& cases, const std::vector<geo::Region>& regions,
                            const LatLon& center) {
    CaseCounts n;
    for (const auto& c : cases) {
        LatLon at;
        if (c.location) {
            at = *c.location;
        } else {
            const geo::Region* home = nullptr;
            for (const auto& r : regions)
                if (r.id == c.region_id) home = &r;
            if (!home) fail(ErrorKind::not_found, "case without location references unknown region " + c.region_id);
            at = home->center();
        }
        const double d = haversine_m(at, center);
        if (d <= 500.0) n.within_500m += c.count;
        if (d <= 1000.0) n.within_1km += c.count;
        if (d <= 2000.0) n.within_2km += c.count;
    }
    return n;
}

HotspotClass classify_counts(const CaseCounts& n) {
    if (n.within_500m > 20) return HotspotClass::c1;
    if (n.within_1km > 50) return HotspotClass::c2;
    if (n.within_1km < 5) return HotspotClass::c3;
    if (n.within_2km < 10) return HotspotClass::c4;
    return HotspotClass::none;
}

HotspotClass label_region(const std::vector<pkg::CaseEvent>& cases, const geo::Region& center,
                          const std::vector<geo::Region>& regions) {
    std::vector<geo::Region> lookup = regions;
    if (lookup.empty()) lookup.push_back(center);
    return classify_counts(count_cases_near(cases, lookup, center.center()));
}

}  // namespace mobepi::net
