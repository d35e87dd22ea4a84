#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mobepi/pkg.hpp"

namespace mobepi::pkg {

/// Synthetic visit store: half the entities are users, half places; each
/// user makes `facts_per_user` visits spread over 30 days.
PkgStore synthetic_store(std::size_t entities, std::size_t facts_per_user, std::uint64_t seed);

/// Mixed workload: subject lookups, object lookups and one-hour relation windows.
std::vector<PkgQuery> synthetic_queries(std::size_t entities, std::size_t n, std::uint64_t seed);

/// Reference answer by a straight scan over every fact.
std::vector<TemporalFact> scan_query(const std::vector<TemporalFact>& facts, const PkgQuery& q);

struct BenchConfig {
    std::size_t entities = 5000;
    std::size_t facts_per_user = 8;
    std::size_t queries = 2000;
    std::size_t repeats = 3;  // best-of timing
    bool with_scan = false;
    std::uint64_t seed = 1;
};

struct BenchResult {
    std::size_t entities = 0;
    std::size_t facts = 0;
    std::size_t queries = 0;
    std::size_t results = 0;  // total rows returned by the workload
    double build_s = 0;
    double query_s = 0;           // indexed, queries split across threads
    double query_serial_s = 0;    // indexed, one thread
    double scan_s = -1;           // linear scan baseline, -1 when skipped
};

BenchResult run_query_bench(const BenchConfig& cfg);
std::string bench_json(const BenchResult& r);

}  // namespace mobepi::pkg
