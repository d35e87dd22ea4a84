#include "mobepi/patterns.hpp"

#include <algorithm>
#include <bit>
#include <memory>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

namespace mobepi::patterns {

void validate(const NeighborRelation& nr) {
    require(nr.spatial_buffer_m > 0, "spatial_buffer_m must be > 0");
    require(nr.temporal_span_s > 0, "temporal_span_s must be > 0");
}

void validate(const MinerConfig& cfg) {
    require(cfg.pi1 > 0 && cfg.pi1 <= 1, "pi1 must lie in (0,1]");
    require(cfg.pi2 > 0 && cfg.pi2 <= 1, "pi2 must lie in (0,1]");
    require(cfg.max_size >= 2, "max_size must be >= 2");
}

const char* to_string(PatternKind k) { return k == PatternKind::cascading ? "cascading" : "co_occurrence"; }

Locator make_locator(const std::vector<geo::Place>& places, const std::vector<geo::Region>& regions) {
    auto by_id = std::make_shared<std::map<std::string, LatLon>>();
    for (const auto& r : regions) (*by_id)[r.id] = r.center();
    for (const auto& p : places) (*by_id)[p.id] = p.location;
    return [by_id](const std::string& entity) -> std::optional<LatLon> {
        if (auto box = geo::decode_bbox(entity)) return box->center();
        if (is_set(entity)) {
            const auto members = decode_set(entity);
            if (members.empty()) return std::nullopt;
            LatLon sum{0, 0};
            for (const auto& m : members) {
                auto it = by_id->find(m);
                if (it == by_id->end()) return std::nullopt;
                sum.lat += it->second.lat;
                sum.lon += it->second.lon;
            }
            const double n = static_cast<double>(members.size());
            return LatLon{sum.lat / n, sum.lon / n};
        }
        auto it = by_id->find(entity);
        if (it == by_id->end()) return std::nullopt;
        return it->second;
    };
}

std::vector<Event> events_from_pkg(const pkg::PkgStore& store, const Locator& locate, Tagging tagging) {
    std::vector<Event> out;
    for (const auto& f : store.facts()) {
        std::string anchor;
        std::optional<LatLon> at;
        switch (f.relation) {
        case Relation::hotspot:
        case Relation::bounding_box:
            anchor = f.object;
            at = locate(f.subject);
            if (!at) at = locate(f.object);
            break;
        case Relation::group: continue;
        default:
            anchor = f.object;
            at = locate(f.object);
        }
        if (!at) continue;
        Event e;
        e.fact_id = f.id;
        e.type = tagging == Tagging::anchored ? std::string(to_string(f.relation)) + "@" + anchor
                                              : std::string(to_string(f.relation));
        e.at = *at;
        e.t = f.interval.t1;
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<Event> events_from_contexts(const std::vector<RegionContext>& contexts) {
    std::vector<Event> out;
    for (const auto& c : contexts)
        for (const auto& name : c.active)
            out.push_back(Event{"ctx:" + c.region_id + ":" + name + ":" + std::to_string(c.t), name, c.at, c.t});
    return out;
}

double participation_index(const std::vector<Event>& events, const std::vector<std::string>& member_types,
                           const std::vector<std::vector<std::size_t>>& participating) {
    require(!member_types.empty(), "participation index of an empty pattern");
    require(participating.size() == member_types.size(), "participation lists must match member types");
    double pi = 1.0;
    for (std::size_t k = 0; k < member_types.size(); ++k) {
        const auto total = std::count_if(events.begin(), events.end(),
                                         [&](const Event& e) { return e.type == member_types[k]; });
        if (total == 0) fail(ErrorKind::not_found, "event type absent from the graph: " + member_types[k]);
        std::set<std::size_t> distinct(participating[k].begin(), participating[k].end());
        pi = std::min(pi, static_cast<double>(distinct.size()) / static_cast<double>(total));
    }
    return pi;
}

namespace {

bool before(const Event& a, const Event& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.fact_id < b.fact_id;
}

/// Instances of one pattern: each row lists event indices in member order.
using Instances = std::vector<std::vector<std::size_t>>;

struct Candidate {
    std::vector<std::string> members;
    Instances instances;
};

std::map<std::string, std::size_t> type_totals(const std::vector<Event>& events) {
    std::map<std::string, std::size_t> totals;
    for (const auto& e : events) ++totals[e.type];
    return totals;
}

/// PI plus the sorted supporting fact ids, computed from an instance list.
std::pair<double, std::vector<std::string>> score(const std::vector<Event>& events,
                                                  const std::map<std::string, std::size_t>& totals,
                                                  const std::vector<std::string>& members, const Instances& inst) {
    double pi = 1.0;
    std::set<std::string> support;
    for (std::size_t k = 0; k < members.size(); ++k) {
        std::set<std::size_t> used;
        for (const auto& row : inst) used.insert(row[k]);
        for (std::size_t e : used) support.insert(events[e].fact_id);
        pi = std::min(pi, static_cast<double>(used.size()) / static_cast<double>(totals.at(members[k])));
    }
    return {pi, std::vector<std::string>(support.begin(), support.end())};
}

PatternInstance finish(PatternKind kind, const std::vector<Event>& events,
                       const std::map<std::string, std::size_t>& totals, const Candidate& c) {
    auto [pi, support] = score(events, totals, c.members, c.instances);
    return PatternInstance{kind, c.members, std::move(support), pi};
}

}  // namespace

bool cascade_neighbors(const Event& a, const Event& b, const NeighborRelation& nr) {
    return before(a, b) && b.t - a.t <= nr.temporal_span_s && haversine_m(a.at, b.at) <= nr.spatial_buffer_m;
}

bool cooccur_neighbors(const Event& a, const Event& b, const NeighborRelation& nr) {
    const Timestamp dt = a.t > b.t ? a.t - b.t : b.t - a.t;
    return dt <= nr.temporal_span_s && haversine_m(a.at, b.at) <= nr.spatial_buffer_m;
}

void sort_patterns(std::vector<PatternInstance>& patterns) {
    std::sort(patterns.begin(), patterns.end(), [](const PatternInstance& a, const PatternInstance& b) {
        if (a.members.size() != b.members.size()) return a.members.size() < b.members.size();
        if (a.pi != b.pi) return a.pi > b.pi;
        return a.members < b.members;
    });
}

std::vector<PatternInstance> mine_cascading(const std::vector<Event>& events, const NeighborRelation& nr,
                                            const MinerConfig& cfg) {
    validate(nr);
    validate(cfg);
    std::vector<PatternInstance> out;
    if (events.size() < 2) return out;
    const auto totals = type_totals(events);

    std::vector<std::size_t> order(events.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return before(events[a], events[b]); });

    // Size 2: spatio-temporal join of ordered pairs, swept in time order.
    std::map<std::vector<std::string>, Instances> level;
    for (std::size_t x = 0; x < order.size(); ++x) {
        const Event& a = events[order[x]];
        for (std::size_t y = x + 1; y < order.size(); ++y) {
            const Event& b = events[order[y]];
            if (b.t - a.t > nr.temporal_span_s) break;
            if (a.type == b.type || !cascade_neighbors(a, b, nr)) continue;
            level[{a.type, b.type}].push_back({order[x], order[y]});
        }
    }

    for (std::size_t size = 2; size <= cfg.max_size && !level.empty(); ++size) {
        // Filter this level, then grow the survivors.
        std::vector<Candidate> survivors;
        for (auto& [members, inst] : level) {
            Candidate c{members, std::move(inst)};
            auto p = finish(PatternKind::cascading, events, totals, c);
            if (p.pi >= cfg.pi1) {
                out.push_back(std::move(p));
                survivors.push_back(std::move(c));
            }
        }
        if (size == cfg.max_size) break;
        std::map<std::vector<std::string>, Instances> next;
        for (const auto& c : survivors) {
            for (const auto& row : c.instances) {
                const Event& last = events[row.back()];
                for (std::size_t e = 0; e < events.size(); ++e) {
                    const Event& cand = events[e];
                    if (std::find(c.members.begin(), c.members.end(), cand.type) != c.members.end()) continue;
                    if (!cascade_neighbors(last, cand, nr)) continue;
                    auto members = c.members;
                    members.push_back(cand.type);
                    auto grown = row;
                    grown.push_back(e);
                    next[members].push_back(std::move(grown));
                }
            }
        }
        level = std::move(next);
    }
    sort_patterns(out);
    return out;
}

std::vector<PatternInstance> mine_cooccurrence(const std::vector<Event>& events, const NeighborRelation& nr,
                                               const MinerConfig& cfg) {
    validate(nr);
    validate(cfg);
    std::vector<PatternInstance> out;
    if (events.size() < 2) return out;
    const auto totals = type_totals(events);

    // Size 2: sweep events in time order, keeping the window of events within
    // the temporal span and testing the spatial buffer against it.
    std::vector<std::size_t> order(events.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return before(events[a], events[b]); });
    std::map<std::vector<std::string>, Instances> level;
    std::size_t head = 0;
    for (std::size_t x = 0; x < order.size(); ++x) {
        const Event& b = events[order[x]];
        while (b.t - events[order[head]].t > nr.temporal_span_s) ++head;
        for (std::size_t y = head; y < x; ++y) {
            const Event& a = events[order[y]];
            if (a.type == b.type || !cooccur_neighbors(a, b, nr)) continue;
            const bool a_first = a.type < b.type;
            std::vector<std::string> members = a_first ? std::vector{a.type, b.type} : std::vector{b.type, a.type};
            level[members].push_back(a_first ? std::vector{order[y], order[x]} : std::vector{order[x], order[y]});
        }
    }

    std::set<std::vector<std::string>> alive;
    for (std::size_t size = 2; size <= cfg.max_size && !level.empty(); ++size) {
        std::vector<Candidate> survivors;
        alive.clear();
        for (auto& [members, inst] : level) {
            std::sort(inst.begin(), inst.end());
            Candidate c{members, std::move(inst)};
            auto p = finish(PatternKind::co_occurrence, events, totals, c);
            if (p.pi >= cfg.pi2) {
                out.push_back(std::move(p));
                alive.insert(c.members);
                survivors.push_back(std::move(c));
            }
        }
        if (size == cfg.max_size) break;
        // Extend each survivor by a lexicographically larger type whose every
        // (size)-subset also survived, then join instances by clique test.
        std::map<std::vector<std::string>, Instances> next;
        for (const auto& c : survivors) {
            for (const auto& [type, total] : totals) {
                if (type <= c.members.back()) continue;
                auto members = c.members;
                members.push_back(type);
                bool subsets_alive = true;
                for (std::size_t drop = 0; drop + 1 < members.size() && subsets_alive; ++drop) {
                    auto sub = members;
                    sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(drop));
                    subsets_alive = alive.count(sub) > 0;
                }
                if (!subsets_alive) continue;
                for (const auto& row : c.instances)
                    for (std::size_t e = 0; e < events.size(); ++e) {
                        if (events[e].type != type) continue;
                        const bool clique = std::all_of(row.begin(), row.end(), [&](std::size_t m) {
                            return cooccur_neighbors(events[m], events[e], nr);
                        });
                        if (!clique) continue;
                        auto grown = row;
                        grown.push_back(e);
                        next[members].push_back(std::move(grown));
                    }
            }
        }
        level = std::move(next);
    }
    sort_patterns(out);
    return out;
}

std::vector<PatternInstance> mine_cascading(const pkg::PkgStore& store, const Locator& locate,
                                            const NeighborRelation& nr, const MinerConfig& cfg) {
    return mine_cascading(events_from_pkg(store, locate, Tagging::anchored), nr, cfg);
}

std::vector<PatternInstance> mine_cooccurrence(const pkg::PkgStore& store, const Locator& locate,
                                               const std::vector<RegionContext>& contexts,
                                               const NeighborRelation& nr, const MinerConfig& cfg) {
    auto events = events_from_pkg(store, locate, Tagging::relation_only);
    auto ctx = events_from_contexts(contexts);
    events.insert(events.end(), ctx.begin(), ctx.end());
    return mine_cooccurrence(events, nr, cfg);
}

std::vector<PatternInstance> mine_bruteforce(const std::vector<Event>& events, const NeighborRelation& nr,
                                             const MinerConfig& cfg, PatternKind kind) {
    validate(nr);
    validate(cfg);
    if (events.size() > kBruteForceCap)
        fail(ErrorKind::invalid_input, "brute-force enumeration is capped at " + std::to_string(kBruteForceCap) +
                                           " events, got " + std::to_string(events.size()));
    const auto totals = type_totals(events);
    const std::size_t n = events.size();
    std::map<std::vector<std::string>, Instances> found;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        const auto k = static_cast<std::size_t>(std::popcount(mask));
        if (k < 2 || k > cfg.max_size) continue;
        std::vector<std::size_t> subset;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) subset.push_back(i);
        std::set<std::string> types;
        for (std::size_t i : subset) types.insert(events[i].type);
        if (types.size() != k) continue;

        if (kind == PatternKind::cascading) {
            // A subset has exactly one time order; it is a cascade iff every
            // consecutive pair in that order is an ordered ST neighbour.
            std::sort(subset.begin(), subset.end(),
                      [&](std::size_t a, std::size_t b) { return before(events[a], events[b]); });
            bool ok = true;
            for (std::size_t i = 0; i + 1 < k && ok; ++i)
                ok = cascade_neighbors(events[subset[i]], events[subset[i + 1]], nr);
            if (!ok) continue;
            std::vector<std::string> members;
            for (std::size_t i : subset) members.push_back(events[i].type);
            found[members].push_back(subset);
        } else {
            bool ok = true;
            for (std::size_t i = 0; i < k && ok; ++i)
                for (std::size_t j = i + 1; j < k && ok; ++j)
                    ok = cooccur_neighbors(events[subset[i]], events[subset[j]], nr);
            if (!ok) continue;
            std::sort(subset.begin(), subset.end(),
                      [&](std::size_t a, std::size_t b) { return events[a].type < events[b].type; });
            std::vector<std::string> members;
            for (std::size_t i : subset) members.push_back(events[i].type);
            found[members].push_back(subset);
        }
    }
    const double threshold = kind == PatternKind::cascading ? cfg.pi1 : cfg.pi2;
    std::vector<PatternInstance> out;
    for (auto& [members, inst] : found) {
        auto p = finish(kind, events, totals, Candidate{members, inst});
        if (p.pi >= threshold) out.push_back(std::move(p));
    }
    sort_patterns(out);
    return out;
}

std::string to_json_line(const PatternInstance& p) {
    nlohmann::json j;
    j["kind"] = to_string(p.kind);
    j["members"] = p.members;
    j["supporting_fact_ids"] = p.supporting_ids;
    j["pi"] = p.pi;
    return j.dump();
}

PatternInstance pattern_from_json_line(const std::string& line) {
    try {
        const auto j = nlohmann::json::parse(line);
        PatternInstance p;
        const auto kind = j.at("kind").get<std::string>();
        require(kind == "cascading" || kind == "co_occurrence", "unknown pattern kind " + kind);
        p.kind = kind == "cascading" ? PatternKind::cascading : PatternKind::co_occurrence;
        p.members = j.at("members").get<std::vector<std::string>>();
        p.supporting_ids = j.at("supporting_fact_ids").get<std::vector<std::string>>();
        p.pi = j.at("pi").get<double>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, std::string("bad pattern line: ") + e.what());
    }
}

}  // namespace mobepi::patterns
