#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mobepi {

/// Seconds since the Unix epoch.
using Timestamp = std::int64_t;

enum class ErrorKind { invalid_input, not_found, parse, io };

const char* to_string(ErrorKind kind);

/// Single exception type used across the library. The CLI maps every
/// kind to exit code 1 and prints the category.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorKind::invalid_input, what);
}

/// Closed time interval. An absent end means the fact is still valid ("[t1, -]").
struct Interval {
    Timestamp t1 = 0;
    std::optional<Timestamp> t2;

    static Interval closed(Timestamp a, Timestamp b) { return {a, b}; }
    static Interval open(Timestamp a) { return {a, std::nullopt}; }

    bool is_open() const { return !t2.has_value(); }
    Timestamp end_or_max() const { return t2 ? *t2 : std::numeric_limits<Timestamp>::max(); }
    bool valid() const { return !t2 || t1 <= *t2; }
    bool overlaps(const Interval& other) const {
        return t1 <= other.end_or_max() && other.t1 <= end_or_max();
    }
    bool contains(Timestamp t) const { return t1 <= t && t <= end_or_max(); }

    friend bool operator==(const Interval&, const Interval&) = default;
};

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
    friend bool operator==(const LatLon&, const LatLon&) = default;
};

inline constexpr double kEarthRadiusM = 6371008.8;
inline constexpr double kPi = 3.14159265358979323846;
/// Meters per degree of latitude on the mean sphere.
inline constexpr double kMetersPerDegree = kEarthRadiusM * kPi / 180.0;

double haversine_m(const LatLon& a, const LatLon& b);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

std::vector<std::string> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string content_hash(std::string_view bytes);

}  // namespace mobepi
