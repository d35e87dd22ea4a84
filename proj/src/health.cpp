#include "mobepi/health.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mobepi::health {

const char* to_string(Parameter p) {
    switch (p) {
    case Parameter::body_temperature: return "body_temperature";
    case Parameter::systolic: return "systolic";
    case Parameter::diastolic: return "diastolic";
    case Parameter::pulse: return "pulse";
    case Parameter::spo2: return "spo2";
    }
    return "body_temperature";
}

Parameter parse_parameter(std::string_view text) {
    for (auto p : kAllParameters)
        if (text == to_string(p)) return p;
    fail(ErrorKind::parse, "unknown health parameter '" + std::string(text) + "'");
}

const char* to_string(Status s) { return s == Status::normal ? "Normal" : "Abnormal"; }

void validate(const HealthProfile& p) {
    require(!p.ranges.empty(), "health profile has no parameters");
    for (const auto& [param, r] : p.ranges) {
        if (!std::isfinite(r.low) || !std::isfinite(r.up))
            fail(ErrorKind::invalid_input, std::string("range of ") + to_string(param) + " is not finite");
        if (r.low > r.up)
            fail(ErrorKind::invalid_input, std::string("range of ") + to_string(param) + " has low > up");
    }
}

StatusResult check_status(const std::vector<Reading>& readings, const HealthProfile& profile) {
    validate(profile);
    std::set<Parameter> seen, bad;
    StatusResult res;
    for (const Reading& r : readings) {
        const auto it = profile.ranges.find(r.parameter);
        if (it == profile.ranges.end())
            fail(ErrorKind::not_found, std::string("profile has no range for ") + to_string(r.parameter));
        if (!std::isfinite(r.value))
            fail(ErrorKind::invalid_input, std::string("reading of ") + to_string(r.parameter) + " is not finite");
        seen.insert(r.parameter);
        if (!it->second.contains(r.value)) {
            bad.insert(r.parameter);
            res.out_of_range.push_back(r);
        }
    }
    for (const auto& [param, range] : profile.ranges)
        if (!seen.count(param)) fail(ErrorKind::not_found, std::string("missing reading for ") + to_string(param));
    res.violations.assign(bad.begin(), bad.end());
    res.status = bad.empty() ? Status::normal : Status::abnormal;
    return res;
}

std::string context_bucket(const Reading& r) {
    if (r.env_temperature_c) {
        if (*r.env_temperature_c >= 30.0) return "hot";
        if (*r.env_temperature_c <= 10.0) return "cold";
    }
    if (r.humidity_pct && *r.humidity_pct >= 80.0) return "humid";
    return "default";
}

const HealthProfile& select_profile(const ProfileBook& book, const std::vector<Reading>& readings) {
    std::string bucket = "default";
    for (const Reading& r : readings)
        if (r.env_temperature_c || r.humidity_pct) {
            bucket = context_bucket(r);
            break;
        }
    auto it = book.buckets.find(bucket);
    if (it == book.buckets.end()) it = book.buckets.find("default");
    if (it == book.buckets.end()) fail(ErrorKind::not_found, "no profile for context '" + bucket + "' and no default");
    return it->second;
}

namespace {

std::vector<std::vector<std::string>> csv_rows(const std::string& text, const std::string& source,
                                               const std::string& header, std::vector<std::size_t>& line_numbers) {
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::vector<std::string>> rows;
    bool have_header = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        if (!have_header) {
            if (trim(line).substr(0, header.size()) != header)
                fail(ErrorKind::parse, source + ":" + std::to_string(lineno) + ": expected header '" + header + "'");
            have_header = true;
            continue;
        }
        rows.push_back(split(trim(line), ','));
        line_numbers.push_back(lineno);
    }
    return rows;
}

}  // namespace

ProfileBook parse_profiles_csv(const std::string& text, const std::string& source) {
    std::vector<std::size_t> lines;
    const auto rows = csv_rows(text, source, "bucket,parameter,low,up", lines);
    ProfileBook book;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto where = source + ":" + std::to_string(lines[i]) + ": ";
        const auto& f = rows[i];
        if (f.size() != 4) fail(ErrorKind::parse, where + "expected 4 fields");
        try {
            auto& profile = book.buckets[std::string(trim(f[0]))];
            const Parameter p = parse_parameter(trim(f[1]));
            if (profile.ranges.count(p)) fail(ErrorKind::invalid_input, std::string("duplicate range for ") + to_string(p));
            profile.ranges[p] = {parse_double(f[2]), parse_double(f[3])};
        } catch (const Error& e) {
            fail(e.kind(), where + e.what());
        }
    }
    for (const auto& [bucket, profile] : book.buckets) {
        try {
            validate(profile);
        } catch (const Error& e) {
            fail(e.kind(), source + ": bucket " + bucket + ": " + e.what());
        }
    }
    return book;
}

std::vector<Reading> parse_readings_csv(const std::string& text, const std::string& source) {
    std::vector<std::size_t> lines;
    const auto rows = csv_rows(text, source, "parameter,value,timestamp", lines);
    std::vector<Reading> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto where = source + ":" + std::to_string(lines[i]) + ": ";
        const auto& f = rows[i];
        if (f.size() != 3 && f.size() != 6) fail(ErrorKind::parse, where + "expected 3 or 6 fields");
        try {
            Reading r;
            r.parameter = parse_parameter(trim(f[0]));
            r.value = parse_double(f[1]);
            r.t = parse_int(f[2]);
            if (f.size() == 6) {
                if (!trim(f[3]).empty()) r.location = std::string(trim(f[3]));
                if (!trim(f[4]).empty()) r.env_temperature_c = parse_double(f[4]);
                if (!trim(f[5]).empty()) r.humidity_pct = parse_double(f[5]);
            }
            if (!std::isfinite(r.value)) fail(ErrorKind::invalid_input, "value is not finite");
            out.push_back(std::move(r));
        } catch (const Error& e) {
            fail(e.kind(), where + e.what());
        }
    }
    return out;
}

std::string alert_json(const StatusResult& r, const HealthProfile& profile) {
    nlohmann::json j;
    j["status"] = to_string(r.status);
    auto violations = nlohmann::json::array();
    for (auto p : r.violations) violations.push_back(to_string(p));
    j["violations"] = violations;
    auto alerts = nlohmann::json::array();
    for (const Reading& rd : r.out_of_range) {
        const Range& range = profile.ranges.at(rd.parameter);
        alerts.push_back({{"parameter", to_string(rd.parameter)},
                          {"value", rd.value},
                          {"range", {range.low, range.up}},
                          {"timestamp", rd.t}});
    }
    j["alerts"] = alerts;
    return j.dump();
}

}  // namespace mobepi::health
