#pragma once

#include <vector>

#include "mobepi/common.hpp"
#include "mobepi/geo.hpp"

namespace mobepi::pkg {
struct CaseEvent;
}

namespace mobepi::net {

/// C1: >20 cases within 500 m; C2: >50 within 1 km; C3: <5 within 1 km;
/// C4: <10 within 2 km; NONE when no class applies.
enum class HotspotClass { c1 = 0, c2 = 1, c3 = 2, c4 = 3, none = 4 };

inline constexpr std::size_t kNumClasses = 5;

const char* to_string(HotspotClass c);
HotspotClass parse_class(std::string_view text);
inline bool is_hotspot(HotspotClass c) { return c == HotspotClass::c1 || c == HotspotClass::c2; }

struct CaseCounts {
    int within_500m = 0;
    int within_1km = 0;
    int within_2km = 0;
};

CaseCounts count_cases_near(const std::vector<pkg::CaseEvent>& cases, const std::vector<geo::Region>& regions,
                            const LatLon& center);

/// First matching class in priority order C1, C2, C3, C4.
HotspotClass classify_counts(const CaseCounts& counts);

/// Case locations fall back to their region's centre when not geocoded.
HotspotClass label_region(const std::vector<pkg::CaseEvent>& cases, const geo::Region& center,
                          const std::vector<geo::Region>& regions = {});

}  // namespace mobepi::net
