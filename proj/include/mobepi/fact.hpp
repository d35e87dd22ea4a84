#pragma once

#include <string>
#include <vector>

#include "mobepi/common.hpp"

namespace mobepi {

enum class Relation { visit, group, flow, hotspot, connectivity, connected_by, bounding_box, infected };

inline constexpr Relation kAllRelations[] = {Relation::visit,        Relation::group,        Relation::flow,
                                             Relation::hotspot,      Relation::connectivity, Relation::connected_by,
                                             Relation::bounding_box, Relation::infected};

const char* to_string(Relation r);
Relation parse_relation(std::string_view text);

/// One interval-stamped edge <subject, relation, object, [t1,t2], feature>.
/// Entity sets are encoded with encode_set; a bounding box subject with encode_bbox.
struct TemporalFact {
    std::string id;
    std::string subject;
    Relation relation = Relation::visit;
    std::string object;
    Interval interval;
    double feature = 0.0;

    friend bool operator==(const TemporalFact&, const TemporalFact&) = default;
};

/// Upsert key text; the fact id is its content hash.
std::string fact_key(const std::string& subject, Relation relation, const std::string& object,
                     const Interval& interval);
std::string fact_id(const std::string& subject, Relation relation, const std::string& object,
                    const Interval& interval);

TemporalFact make_fact(std::string subject, Relation relation, std::string object, Interval interval,
                       double feature);

/// Throws invalid_input with the reason when a fact breaks its type invariants.
void validate_fact(const TemporalFact& f);

/// "{a|b|c}" with members sorted; single ids are left as-is by callers.
std::string encode_set(std::vector<std::string> members);
bool is_set(const std::string& entity);
std::vector<std::string> decode_set(const std::string& entity);

}  // namespace mobepi
