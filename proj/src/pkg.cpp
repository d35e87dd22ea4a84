#include "mobepi/pkg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <set>

#include "mobepi/hotspot_label.hpp"

namespace mobepi::pkg {

void validate_user(const User& u) {
    require(!u.id.empty(), "user id must be non-empty");
    for (std::size_t i = 1; i < u.trajectory.size(); ++i)
        require(u.trajectory[i - 1].t < u.trajectory[i].t,
                "user " + u.id + ": trajectory timestamps must be strictly increasing");
}

bool PkgQuery::matches(const TemporalFact& f) const {
    if (subject && f.subject != *subject) return false;
    if (relation && f.relation != *relation) return false;
    if (object && f.object != *object) return false;
    if (window && !f.interval.overlaps(*window)) return false;
    return true;
}

PkgStore::PkgStore(const PkgStore& other) {
    std::shared_lock lock(other.mu_);
    slots_ = other.slots_;
    by_id_ = other.by_id_;
    by_subject_ = other.by_subject_;
    by_object_ = other.by_object_;
    by_relation_ = other.by_relation_;
    by_t1_ = other.by_t1_;
    max_closed_span_ = other.max_closed_span_;
    open_slots_ = other.open_slots_;
}

PkgStore& PkgStore::operator=(const PkgStore& other) {
    if (this == &other) return *this;
    PkgStore copy(other);
    std::unique_lock lock(mu_);
    slots_ = std::move(copy.slots_);
    by_id_ = std::move(copy.by_id_);
    by_subject_ = std::move(copy.by_subject_);
    by_object_ = std::move(copy.by_object_);
    by_relation_ = std::move(copy.by_relation_);
    by_t1_ = std::move(copy.by_t1_);
    max_closed_span_ = copy.max_closed_span_;
    open_slots_ = std::move(copy.open_slots_);
    return *this;
}

void PkgStore::index_slot(Slot s) {
    const TemporalFact& f = slots_[s];
    by_id_.emplace(f.id, s);
    by_subject_[f.subject].push_back(s);
    by_object_[f.object].push_back(s);
    by_relation_[f.relation].push_back(s);
    by_t1_.emplace(f.interval.t1, s);
    if (f.interval.is_open())
        open_slots_.push_back(s);
    else
        max_closed_span_ = std::max(max_closed_span_, *f.interval.t2 - f.interval.t1);
}

std::string PkgStore::assert_fact(TemporalFact fact) {
    validate_fact(fact);
    fact.id = fact_id(fact.subject, fact.relation, fact.object, fact.interval);
    std::unique_lock lock(mu_);
    if (auto it = by_id_.find(fact.id); it != by_id_.end()) {
        slots_[it->second].feature = fact.feature;
        return fact.id;
    }
    slots_.push_back(std::move(fact));
    index_slot(slots_.size() - 1);
    return slots_.back().id;
}

void PkgStore::assert_all(const std::vector<TemporalFact>& facts) {
    for (const auto& f : facts) assert_fact(f);
}

std::vector<PkgStore::Slot> PkgStore::candidates(const PkgQuery& q) const {
    static const std::vector<Slot> kNone;
    const std::vector<Slot>* best = nullptr;
    auto consider = [&](const std::vector<Slot>* list) {
        if (!best || list->size() < best->size()) best = list;
    };
    if (q.subject) {
        auto it = by_subject_.find(*q.subject);
        consider(it == by_subject_.end() ? &kNone : &it->second);
    }
    if (q.object) {
        auto it = by_object_.find(*q.object);
        consider(it == by_object_.end() ? &kNone : &it->second);
    }
    if (best) return *best;

    if (q.window) {
        // Closed facts overlapping [a, b] start in [a - max_span, b]; open ones anywhere <= b.
        const Timestamp b = q.window->end_or_max();
        const Timestamp a = q.window->t1;
        const Timestamp lo = a > std::numeric_limits<Timestamp>::min() + max_closed_span_ ? a - max_closed_span_
                                                                                          : a;
        std::vector<Slot> out;
        for (auto it = by_t1_.lower_bound(lo); it != by_t1_.end() && it->first <= b; ++it) out.push_back(it->second);
        for (Slot s : open_slots_)
            if (slots_[s].interval.t1 < lo) out.push_back(s);
        return out;
    }
    if (q.relation) {
        auto it = by_relation_.find(*q.relation);
        return it == by_relation_.end() ? kNone : it->second;
    }
    std::vector<Slot> all(slots_.size());
    for (Slot s = 0; s < all.size(); ++s) all[s] = s;
    return all;
}

namespace {

void sort_facts(std::vector<TemporalFact>& v) {
    std::sort(v.begin(), v.end(), [](const TemporalFact& a, const TemporalFact& b) {
        if (a.interval.t1 != b.interval.t1) return a.interval.t1 < b.interval.t1;
        return a.id < b.id;
    });
}

}  // namespace

std::vector<TemporalFact> PkgStore::query(const PkgQuery& q) const {
    require(q.any_bound(), "query must bind at least one field");
    require(!q.window || q.window->valid(), "query window has t1 > t2");
    std::shared_lock lock(mu_);
    std::vector<TemporalFact> out;
    for (Slot s : candidates(q))
        if (q.matches(slots_[s])) out.push_back(slots_[s]);
    sort_facts(out);
    return out;
}

std::optional<TemporalFact> PkgStore::find(const std::string& id) const {
    std::shared_lock lock(mu_);
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    return slots_[it->second];
}

std::vector<TemporalFact> PkgStore::facts() const {
    std::shared_lock lock(mu_);
    std::vector<TemporalFact> out = slots_;
    sort_facts(out);
    return out;
}

std::size_t PkgStore::size() const {
    std::shared_lock lock(mu_);
    return slots_.size();
}

// ---------------------------------------------------------------------------
// visits

namespace {

std::optional<std::size_t> nearest_place(const std::vector<geo::Place>& places, const LatLon& at, double radius) {
    std::optional<std::size_t> best;
    double best_d = 0;
    for (std::size_t i = 0; i < places.size(); ++i) {
        const double d = haversine_m(places[i].location, at);
        if (d > radius) continue;
        if (!best || d < best_d || (d == best_d && places[i].id < places[*best].id)) {
            best = i;
            best_d = d;
        }
    }
    return best;
}

std::vector<TemporalFact> raw_visits(const User& user, const std::vector<geo::Place>& places, double radius,
                                     double min_s) {
    require(radius > 0, "stay_radius_m must be > 0");
    require(min_s > 0, "stay_min_s must be > 0");
    validate_user(user);
    std::vector<TemporalFact> out;
    const auto& tr = user.trajectory;
    std::size_t i = 0;
    while (i < tr.size()) {
        const auto p = nearest_place(places, tr[i].at, radius);
        std::size_t j = i + 1;
        if (p) {
            while (j < tr.size() && nearest_place(places, tr[j].at, radius) == p) ++j;
            const Timestamp t1 = tr[i].t, t2 = tr[j - 1].t;
            if (static_cast<double>(t2 - t1) >= min_s)
                out.push_back(make_fact(user.id, Relation::visit, places[*p].id, Interval::closed(t1, t2),
                                        static_cast<double>(t2 - t1)));
        }
        i = j;
    }
    return out;
}

}  // namespace

void normalize_visit_features(std::vector<TemporalFact>& visits) {
    std::map<std::string, Timestamp> longest;
    for (const auto& v : visits) {
        auto& m = longest[v.object];
        m = std::max(m, v.interval.end_or_max() - v.interval.t1);
    }
    for (auto& v : visits) {
        const Timestamp m = longest[v.object];
        const double dur = static_cast<double>(v.interval.end_or_max() - v.interval.t1);
        v.feature = m > 0 ? std::clamp(dur / static_cast<double>(m), 0.0, 1.0) : 1.0;
    }
}

std::vector<TemporalFact> derive_visits(const User& user, const std::vector<geo::Place>& places,
                                        double stay_radius_m, double stay_min_s) {
    auto out = raw_visits(user, places, stay_radius_m, stay_min_s);
    normalize_visit_features(out);
    return out;
}

std::vector<TemporalFact> derive_visits_all(const std::vector<User>& users, const std::vector<geo::Place>& places,
                                            double stay_radius_m, double stay_min_s) {
    std::vector<TemporalFact> out;
    for (const User& u : users) {
        auto v = raw_visits(u, places, stay_radius_m, stay_min_s);
        out.insert(out.end(), v.begin(), v.end());
    }
    normalize_visit_features(out);
    sort_facts(out);
    return out;
}

// ---------------------------------------------------------------------------
// groups

namespace {

struct Episode {
    std::string place;
    Timestamp start = 0;
    Timestamp end = 0;
};

using EpisodeSet = std::vector<std::size_t>;  // sorted episode indices

EpisodeSet intersect(const EpisodeSet& a, const EpisodeSet& b) {
    EpisodeSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

}  // namespace

std::vector<TemporalFact> derive_groups(const std::vector<TemporalFact>& visits, Timestamp time_tol_s,
                                        std::size_t min_places) {
    require(time_tol_s >= 0, "time_tol_s must be >= 0");
    // Co-visits at one place chain into an episode when their intervals overlap
    // after widening by the tolerance.
    std::map<std::string, std::vector<const TemporalFact*>> per_place;
    for (const auto& v : visits)
        if (v.relation == Relation::visit) per_place[v.object].push_back(&v);

    std::vector<Episode> episodes;
    std::vector<std::pair<const TemporalFact*, std::size_t>> assignment;
    for (auto& [place, list] : per_place) {
        std::sort(list.begin(), list.end(), [](const TemporalFact* a, const TemporalFact* b) {
            if (a->interval.t1 != b->interval.t1) return a->interval.t1 < b->interval.t1;
            return a->id < b->id;
        });
        Timestamp reach = 0;
        for (const TemporalFact* v : list) {
            const Timestamp end = v->interval.end_or_max();
            if (episodes.empty() || episodes.back().place != place || v->interval.t1 > reach) {
                episodes.push_back({place, v->interval.t1, end});
                reach = end > std::numeric_limits<Timestamp>::max() - time_tol_s ? end : end + time_tol_s;
            } else {
                episodes.back().end = std::max(episodes.back().end, end);
                reach = std::max(reach, end > std::numeric_limits<Timestamp>::max() - time_tol_s ? end
                                                                                             : end + time_tol_s);
            }
            assignment.emplace_back(v, episodes.size() - 1);
        }
    }

    // Renumber episodes chronologically so sets read as visit sequences.
    std::vector<std::size_t> order(episodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (episodes[a].start != episodes[b].start) return episodes[a].start < episodes[b].start;
        return episodes[a].place < episodes[b].place;
    });
    std::vector<std::size_t> rank(episodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

    std::map<std::string, std::set<std::size_t>> user_sets;
    for (const auto& [v, e] : assignment) user_sets[v->subject].insert(rank[e]);

    std::vector<std::pair<std::string, EpisodeSet>> users;
    for (const auto& [u, s] : user_sets)
        if (s.size() >= min_places) users.emplace_back(u, EpisodeSet(s.begin(), s.end()));

    // Intersection closure: every closed episode set shared by >= 2 users is an
    // intersection of some users' sets. Sets below min_places cannot grow back.
    std::set<EpisodeSet> family;
    for (const auto& [u, s] : users) {
        std::vector<EpisodeSet> fresh;
        for (const auto& f : family) {
            auto x = intersect(f, s);
            if (x.size() >= min_places) fresh.push_back(std::move(x));
        }
        family.insert(s);
        for (auto& x : fresh) family.insert(std::move(x));
    }

    std::vector<TemporalFact> out;
    for (const auto& candidate : family) {
        std::vector<std::string> members;
        EpisodeSet closure;
        bool first = true;
        for (const auto& [u, s] : users) {
            if (!std::includes(s.begin(), s.end(), candidate.begin(), candidate.end())) continue;
            members.push_back(u);
            closure = first ? s : intersect(closure, s);
            first = false;
        }
        if (members.size() < 2 || closure != candidate) continue;
        std::string seq = "[";
        Timestamp t1 = std::numeric_limits<Timestamp>::max(), t2 = std::numeric_limits<Timestamp>::min();
        for (std::size_t k = 0; k < candidate.size(); ++k) {
            const Episode& ep = episodes[order[candidate[k]]];
            if (k) seq += '>';
            seq += ep.place;
            t1 = std::min(t1, ep.start);
            t2 = std::max(t2, ep.end);
        }
        seq += ']';
        const double n = static_cast<double>(members.size());
        out.push_back(make_fact(encode_set(members), Relation::group, seq, Interval::closed(t1, t2), n / (n + 1.0)));
    }
    sort_facts(out);
    return out;
}

// ---------------------------------------------------------------------------
// flows

namespace {

Timestamp floor_div(Timestamp a, Timestamp b) {
    Timestamp q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

std::vector<TemporalFact> derive_flows(const std::vector<TemporalFact>& visits, int nu, Timestamp slot_s) {
    require(nu >= 1, "nu must be >= 1");
    require(slot_s > 0, "flow slot width must be > 0");
    std::map<std::string, std::vector<const TemporalFact*>> per_user;
    for (const auto& v : visits)
        if (v.relation == Relation::visit) per_user[v.subject].push_back(&v);

    std::map<std::tuple<std::string, std::string, Timestamp>, std::set<std::string>> movers;
    for (auto& [user, list] : per_user) {
        std::sort(list.begin(), list.end(), [](const TemporalFact* a, const TemporalFact* b) {
            if (a->interval.t1 != b->interval.t1) return a->interval.t1 < b->interval.t1;
            return a->id < b->id;
        });
        for (std::size_t i = 0; i + 1 < list.size(); ++i) {
            const TemporalFact& a = *list[i];
            const TemporalFact& b = *list[i + 1];
            if (a.object == b.object || a.interval.is_open()) continue;
            movers[{a.object, b.object, floor_div(*a.interval.t2, slot_s)}].insert(user);
        }
    }
    std::vector<TemporalFact> out;
    for (const auto& [key, users] : movers) {
        if (static_cast<int>(users.size()) < nu) continue;
        const auto& [pa, pb, slot] = key;
        out.push_back(make_fact(pa, Relation::flow, pb, Interval::closed(slot * slot_s, slot * slot_s + slot_s - 1),
                                static_cast<double>(users.size())));
    }
    sort_facts(out);
    return out;
}

// ---------------------------------------------------------------------------
// hotspots

std::vector<TemporalFact> route_facts(const std::vector<geo::Route>& routes, const Interval& valid) {
    require(valid.valid(), "route validity interval has t1 > t2");
    std::vector<TemporalFact> out;
    for (const auto& r : routes) {
        require(r.route_count >= 0, "route count must be >= 0");
        out.push_back(make_fact(r.src_id, Relation::connectivity, r.dst_id, valid, r.route_count));
    }
    return out;
}

std::vector<TemporalFact> derive_hotspot_facts(const std::vector<CaseEvent>& cases,
                                               const std::vector<geo::Region>& regions) {
    if (cases.empty()) return {};
    std::map<std::string, const geo::Region*> by_id;
    for (const auto& r : regions) by_id[r.id] = &r;
    auto location = [&](const CaseEvent& c) -> LatLon {
        if (c.location) return *c.location;
        auto it = by_id.find(c.region_id);
        if (it == by_id.end()) fail(ErrorKind::not_found, "case references unknown region " + c.region_id);
        return it->second->center();
    };

    std::vector<bool> hot(regions.size(), false);
    for (std::size_t i = 0; i < regions.size(); ++i)
        hot[i] = net::is_hotspot(net::label_region(cases, regions[i], regions));

    std::vector<bool> seen(regions.size(), false);
    std::vector<TemporalFact> out;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        if (!hot[i] || seen[i]) continue;
        std::vector<std::size_t> component{i};
        seen[i] = true;
        for (std::size_t k = 0; k < component.size(); ++k)
            for (std::size_t j = 0; j < regions.size(); ++j)
                if (hot[j] && !seen[j] && geo::share_border(regions[component[k]].bbox, regions[j].bbox)) {
                    seen[j] = true;
                    component.push_back(j);
                }

        geo::BBox box = regions[component[0]].bbox;
        std::vector<std::string> ids;
        for (std::size_t r : component) {
            box = box.united(regions[r].bbox);
            ids.push_back(regions[r].id);
        }
        // Infected count: cases located inside the component's bounding box. If
        // the qualifying cases all lie outside it (a ring around the centre),
        // fall back to cases within 1 km of a member centre.
        long total = 0;
        Timestamp first = std::numeric_limits<Timestamp>::max();
        for (const auto& c : cases)
            if (box.contains(location(c))) {
                total += c.count;
                first = std::min(first, c.t);
            }
        if (total == 0) {
            for (const auto& c : cases) {
                const LatLon at = location(c);
                const bool near = std::any_of(component.begin(), component.end(), [&](std::size_t r) {
                    return haversine_m(at, regions[r].center()) <= 1000.0;
                });
                if (near) {
                    total += c.count;
                    first = std::min(first, c.t);
                }
            }
        }
        out.push_back(make_fact(geo::encode_bbox(box), Relation::hotspot, encode_set(ids), Interval::open(first),
                                static_cast<double>(total)));
    }
    sort_facts(out);
    return out;
}

// ---------------------------------------------------------------------------
// contact tracing

std::vector<std::string> contact_trace(const std::string& infected, const PkgStore& store, double spatial_tol_m,
                                       Timestamp time_tol_s, const std::vector<geo::Place>& places) {
    require(spatial_tol_m >= 0 && time_tol_s >= 0, "tolerances must be >= 0");
    PkgQuery mine;
    mine.subject = infected;
    mine.relation = Relation::visit;
    const auto own = store.query(mine);
    if (own.empty()) fail(ErrorKind::not_found, "unknown user or no visits recorded: " + infected);

    std::map<std::string, const geo::Place*> place_by_id;
    for (const auto& p : places) place_by_id[p.id] = &p;

    std::map<std::string, Timestamp> earliest;
    for (const auto& v : own) {
        std::vector<std::string> nearby{v.object};
        if (spatial_tol_m > 0) {
            if (auto it = place_by_id.find(v.object); it != place_by_id.end())
                for (auto& id : geo::places_within(places, it->second->location, spatial_tol_m))
                    if (id != v.object) nearby.push_back(id);
        }
        const Timestamp lo = v.interval.t1 - time_tol_s;
        const Timestamp hi = v.interval.is_open() ? std::numeric_limits<Timestamp>::max()
                                                  : *v.interval.t2 + time_tol_s;
        PkgQuery q;
        q.relation = Relation::visit;
        q.window = Interval::closed(lo, hi);
        for (const auto& place : nearby) {
            q.object = place;
            for (const auto& other : store.query(q)) {
                if (other.subject == infected) continue;
                const Timestamp start = std::max(lo, other.interval.t1);
                auto [it, inserted] = earliest.emplace(other.subject, start);
                if (!inserted) it->second = std::min(it->second, start);
            }
        }
    }
    std::vector<std::pair<Timestamp, std::string>> ranked;
    for (const auto& [u, t] : earliest) ranked.emplace_back(t, u);
    std::sort(ranked.begin(), ranked.end());
    std::vector<std::string> out;
    for (auto& [t, u] : ranked) out.push_back(u);
    return out;
}

}  // namespace mobepi::pkg
