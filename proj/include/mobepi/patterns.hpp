#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mobepi/common.hpp"
#include "mobepi/pkg.hpp"

namespace mobepi::patterns {

/// Spatio-temporal neighbour relation between two events.
struct NeighborRelation {
    double spatial_buffer_m = 2000.0;
    Timestamp temporal_span_s = 7 * 24 * 3600;
};

struct MinerConfig {
    double pi1 = 0.3;  // cascading threshold
    double pi2 = 0.3;  // co-occurrence threshold
    std::size_t max_size = 3;
};

void validate(const NeighborRelation& nr);
void validate(const MinerConfig& cfg);

/// A located, typed occurrence mined for patterns. PKG facts become events via
/// events_from_pkg; region contexts and external events can be added directly.
struct Event {
    std::string fact_id;
    std::string type;
    LatLon at;
    Timestamp t = 0;
};

enum class PatternKind { cascading, co_occurrence };
const char* to_string(PatternKind k);

struct PatternInstance {
    PatternKind kind = PatternKind::cascading;
    std::vector<std::string> members;         // ordered for cascading, sorted for co-occurrence
    std::vector<std::string> supporting_ids;  // sorted fact ids of participating events
    double pi = 0.0;

    friend bool operator==(const PatternInstance&, const PatternInstance&) = default;
};

/// Event-type tagging of PKG facts: "relation@anchor" (anchor = the place or
/// region the fact is located at) or the bare relation name.
enum class Tagging { anchored, relation_only };

/// Resolves an entity id (place, region, or encoded bbox) to a location.
using Locator = std::function<std::optional<LatLon>(const std::string&)>;

Locator make_locator(const std::vector<geo::Place>& places, const std::vector<geo::Region>& regions);

/// Facts whose anchor cannot be located are skipped. Anchor: the object for
/// visit/flow/connectivity/infected facts, the subject bbox for hotspot facts.
std::vector<Event> events_from_pkg(const pkg::PkgStore& store, const Locator& locate, Tagging tagging);

/// Per-region boolean contexts turned into events typed by context name.
struct RegionContext {
    std::string region_id;
    LatLon at;
    Timestamp t = 0;
    std::vector<std::string> active;  // e.g. "density>delta", "movement>gamma", "festival"
};

std::vector<Event> events_from_contexts(const std::vector<RegionContext>& contexts);

/// Participation index: min over member types of participating / total events
/// of that type. `participating` lists event indices per member type.
double participation_index(const std::vector<Event>& events, const std::vector<std::string>& member_types,
                           const std::vector<std::vector<std::size_t>>& participating);

/// Ordered ST-neighbour test for consecutive cascade members (a strictly before b).
bool cascade_neighbors(const Event& a, const Event& b, const NeighborRelation& nr);
/// Order-free ST-neighbour test for co-occurrence members.
bool cooccur_neighbors(const Event& a, const Event& b, const NeighborRelation& nr);

/// Level-wise apriori growth of cascades: size-2 candidates from ST-joined
/// event pairs, each level filtered by PI >= pi1 before it is extended.
std::vector<PatternInstance> mine_cascading(const std::vector<Event>& events, const NeighborRelation& nr,
                                            const MinerConfig& cfg);

/// Co-occurrence (clique) patterns: pair instances from a time sweep with a
/// spatial window test, grown level-wise with subset pruning, filtered by PI >= pi2.
std::vector<PatternInstance> mine_cooccurrence(const std::vector<Event>& events, const NeighborRelation& nr,
                                               const MinerConfig& cfg);

std::vector<PatternInstance> mine_cascading(const pkg::PkgStore& store, const Locator& locate,
                                            const NeighborRelation& nr, const MinerConfig& cfg);
std::vector<PatternInstance> mine_cooccurrence(const pkg::PkgStore& store, const Locator& locate,
                                               const std::vector<RegionContext>& contexts,
                                               const NeighborRelation& nr, const MinerConfig& cfg);

inline constexpr std::size_t kBruteForceCap = 12;

/// Reference answer: enumerates every subset of events and applies the same
/// predicates. Errors above kBruteForceCap events.
std::vector<PatternInstance> mine_bruteforce(const std::vector<Event>& events, const NeighborRelation& nr,
                                             const MinerConfig& cfg, PatternKind kind);

/// Deterministic output order: (size, PI desc, member tags).
void sort_patterns(std::vector<PatternInstance>& patterns);

std::string to_json_line(const PatternInstance& p);
PatternInstance pattern_from_json_line(const std::string& line);

}  // namespace mobepi::patterns
