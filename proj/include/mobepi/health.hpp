#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mobepi/common.hpp"

namespace mobepi::health {

enum class Parameter { body_temperature, systolic, diastolic, pulse, spo2 };

inline constexpr std::array<Parameter, 5> kAllParameters = {Parameter::body_temperature, Parameter::systolic,
                                                             Parameter::diastolic, Parameter::pulse, Parameter::spo2};

const char* to_string(Parameter p);
Parameter parse_parameter(std::string_view text);

struct Range {
    double low = 0.0;
    double up = 0.0;
    bool contains(double v) const { return low <= v && v <= up; }
};

struct HealthProfile {
    std::map<Parameter, Range> ranges;
};

void validate(const HealthProfile& p);

struct Reading {
    Parameter parameter = Parameter::body_temperature;
    double value = 0.0;
    Timestamp t = 0;
    std::optional<std::string> location;
    std::optional<double> env_temperature_c;
    std::optional<double> humidity_pct;
};

enum class Status { normal, abnormal };
const char* to_string(Status s);

struct StatusResult {
    Status status = Status::normal;
    std::vector<Parameter> violations;  // distinct, in parameter order
    std::vector<Reading> out_of_range;  // offending readings in input order
};

/// Normal iff every reading lies inside its inclusive range. Every reading's
/// parameter must be in the profile and every profile parameter needs a reading.
StatusResult check_status(const std::vector<Reading>& readings, const HealthProfile& profile);

/// Profiles per context bucket; "default" is used when no bucket matches.
struct ProfileBook {
    std::map<std::string, HealthProfile> buckets;
};

/// "hot" at >= 30 C, "cold" at <= 10 C, "humid" at >= 80% humidity otherwise,
/// "default" without context.
std::string context_bucket(const Reading& r);

/// Profile for the context of the readings' first entry carrying context,
/// falling back to "default".
const HealthProfile& select_profile(const ProfileBook& book, const std::vector<Reading>& readings);

/// CSV `bucket,parameter,low,up` (header line required).
ProfileBook parse_profiles_csv(const std::string& text, const std::string& source = "profiles");
/// CSV `parameter,value,timestamp[,location,env_temperature_c,humidity_pct]`.
std::vector<Reading> parse_readings_csv(const std::string& text, const std::string& source = "readings");

/// JSON object with the status and one alert event (parameter, value, range,
/// timestamp) per out-of-range reading.
std::string alert_json(const StatusResult& r, const HealthProfile& profile);

}  // namespace mobepi::health
