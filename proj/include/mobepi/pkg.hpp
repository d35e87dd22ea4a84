#pragma once

#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "mobepi/fact.hpp"
#include "mobepi/geo.hpp"

namespace mobepi::pkg {

struct TrajectorySample {
    Timestamp t = 0;
    LatLon at;
};

struct User {
    std::string id;
    int age = 0;
    std::string gender;
    std::string residence_region;
    std::string health_profile;
    std::vector<TrajectorySample> trajectory;  // strictly increasing timestamps
};

void validate_user(const User& u);

/// Geocoded, region-tagged case report. Location defaults to the region centre
/// when the source carries none.
struct CaseEvent {
    std::string region_id;
    Timestamp t = 0;
    int count = 0;
    std::optional<LatLon> location;
};

struct PkgQuery {
    std::optional<std::string> subject;
    std::optional<Relation> relation;
    std::optional<std::string> object;
    std::optional<Interval> window;

    bool any_bound() const { return subject || relation || object || window; }
    bool matches(const TemporalFact& f) const;
};

/// Interval-stamped fact store. Upserts are keyed by (subject, relation, object,
/// interval); ids are content hashes of that key, so the same facts inserted in
/// any order produce the same store. Readers may run concurrently with each
/// other; writes take an exclusive lock.
class PkgStore {
public:
    PkgStore() = default;
    PkgStore(const PkgStore& other);
    PkgStore& operator=(const PkgStore& other);

    std::string assert_fact(TemporalFact fact);
    void assert_all(const std::vector<TemporalFact>& facts);

    /// Facts matching every bound field, ordered by (t1, id).
    std::vector<TemporalFact> query(const PkgQuery& q) const;
    std::optional<TemporalFact> find(const std::string& id) const;

    /// All facts ordered by (t1, id).
    std::vector<TemporalFact> facts() const;
    std::size_t size() const;
    bool empty() const { return size() == 0; }

private:
    using Slot = std::size_t;
    void index_slot(Slot s);
    std::vector<Slot> candidates(const PkgQuery& q) const;

    mutable std::shared_mutex mu_;
    std::vector<TemporalFact> slots_;
    std::unordered_map<std::string, Slot> by_id_;
    std::unordered_map<std::string, std::vector<Slot>> by_subject_;
    std::unordered_map<std::string, std::vector<Slot>> by_object_;
    std::map<Relation, std::vector<Slot>> by_relation_;
    std::multimap<Timestamp, Slot> by_t1_;
    Timestamp max_closed_span_ = 0;
    std::vector<Slot> open_slots_;
};

// Derivations read inputs and return new facts; committing them is up to the caller.

/// One visit fact per maximal run of consecutive samples that stay within
/// stay_radius_m of the same place for at least stay_min_s. Features are
/// normalized per place (duration / longest visit at that place).
std::vector<TemporalFact> derive_visits(const User& user, const std::vector<geo::Place>& places,
                                        double stay_radius_m, double stay_min_s);

/// derive_visits over many users with per-place normalization across all of them.
std::vector<TemporalFact> derive_visits_all(const std::vector<User>& users, const std::vector<geo::Place>& places,
                                            double stay_radius_m, double stay_min_s);

/// Rescales visit features to duration / max duration at the same place.
void normalize_visit_features(std::vector<TemporalFact>& visits);

/// Group facts: subject = user set, object = "[p1>p2>...]" place sequence.
std::vector<TemporalFact> derive_groups(const std::vector<TemporalFact>& visits, Timestamp time_tol_s,
                                        std::size_t min_places = 3);

inline constexpr Timestamp kDefaultFlowSlot = 3600;

/// Flow facts p_a -> p_b per epoch-aligned slot of the departure time, where at
/// least nu distinct users leave p_a and their next visit is at p_b.
std::vector<TemporalFact> derive_flows(const std::vector<TemporalFact>& visits, int nu,
                                       Timestamp slot_s = kDefaultFlowSlot);

/// Hotspot facts per shared-border component of regions labelled C1/C2:
/// subject = bbox of the component, object = region set, feature = cases
/// tagged to those regions, interval = [first case, open).
std::vector<TemporalFact> derive_hotspot_facts(const std::vector<CaseEvent>& cases,
                                               const std::vector<geo::Region>& regions);

/// Region-level connectivity facts, one per route, valid over `valid`;
/// feature = route count.
std::vector<TemporalFact> route_facts(const std::vector<geo::Route>& routes, const Interval& valid);

/// Users whose visits share a place (or a place within spatial_tol_m when a
/// place table is given) with an overlapping interval, the infected user's
/// interval widened by time_tol_s on both sides. Sorted by earliest overlap.
std::vector<std::string> contact_trace(const std::string& infected, const PkgStore& store, double spatial_tol_m,
                                       Timestamp time_tol_s, const std::vector<geo::Place>& places = {});

}  // namespace mobepi::pkg
