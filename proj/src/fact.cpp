#include "mobepi/fact.hpp"

#include <algorithm>
#include <cmath>

namespace mobepi {

const char* to_string(Relation r) {
    switch (r) {
    case Relation::visit: return "visit";
    case Relation::group: return "group";
    case Relation::flow: return "flow";
    case Relation::hotspot: return "hotspot";
    case Relation::connectivity: return "connectivity";
    case Relation::connected_by: return "connectedBy";
    case Relation::bounding_box: return "boundingBox";
    case Relation::infected: return "infected";
    }
    return "?";
}

Relation parse_relation(std::string_view text) {
    for (Relation r : kAllRelations)
        if (text == to_string(r)) return r;
    fail(ErrorKind::parse, "unknown relation '" + std::string(text) + "'");
}

std::string fact_key(const std::string& subject, Relation relation, const std::string& object,
                     const Interval& interval) {
    std::string key = subject;
    key += '\x1f';
    key += to_string(relation);
    key += '\x1f';
    key += object;
    key += '\x1f';
    key += std::to_string(interval.t1);
    key += '\x1f';
    key += interval.t2 ? std::to_string(*interval.t2) : std::string("-");
    return key;
}

std::string fact_id(const std::string& subject, Relation relation, const std::string& object,
                    const Interval& interval) {
    return content_hash(fact_key(subject, relation, object, interval));
}

TemporalFact make_fact(std::string subject, Relation relation, std::string object, Interval interval,
                       double feature) {
    TemporalFact f;
    f.id = fact_id(subject, relation, object, interval);
    f.subject = std::move(subject);
    f.relation = relation;
    f.object = std::move(object);
    f.interval = interval;
    f.feature = feature;
    return f;
}

namespace {

bool clean_entity(const std::string& s) {
    return !s.empty() && s.find_first_of(",\n\r") == std::string::npos;
}

}  // namespace

void validate_fact(const TemporalFact& f) {
    require(clean_entity(f.subject), "fact subject must be non-empty and free of ',' and newlines");
    require(clean_entity(f.object), "fact object must be non-empty and free of ',' and newlines");
    require(f.interval.valid(), "fact interval has t1 > t2");
    require(std::isfinite(f.feature), "fact feature is not finite");
    if (f.relation == Relation::group)
        require(f.feature >= 0.0 && f.feature < 1.0, "group feature must lie in [0,1)");
    if (f.relation == Relation::hotspot) require(f.feature >= 0.0, "hotspot infected count must be >= 0");
}

std::string encode_set(std::vector<std::string> members) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    std::string out = "{";
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (i) out += '|';
        out += members[i];
    }
    out += '}';
    return out;
}

bool is_set(const std::string& entity) {
    return entity.size() >= 2 && entity.front() == '{' && entity.back() == '}';
}

std::vector<std::string> decode_set(const std::string& entity) {
    if (!is_set(entity)) return {entity};
    const auto inner = std::string_view(entity).substr(1, entity.size() - 2);
    if (inner.empty()) return {};
    return split(inner, '|');
}

}  // namespace mobepi
