#pragma once

#include <span>
#include <string>
#include <vector>

#include "mobepi/geo.hpp"
#include "mobepi/pkg.hpp"

namespace mobepi::stats {

enum class ScClass { none, positive, negative };
const char* to_string(ScClass c);

/// Moran's I over per-region values with the matrix's region order:
///   (n / sum w) * sum_ab w_ab (v_a - mean)(v_b - mean) / sum_a (v_a - mean)^2
/// Returns 0 when every value is equal. Errors when sum w == 0.
double moran_sc(std::span<const double> values, const geo::AdjacencyMatrix& weights);

/// Same quantity, single-threaded straight double loop. Kept as the reference
/// for the OpenMP kernel and in benchmarks.
double moran_sc_serial(std::span<const double> values, const geo::AdjacencyMatrix& weights);

ScClass classify_sc(double sc);

struct ScResult {
    geo::AdjacencyMetric metric = geo::AdjacencyMetric::shared_border;
    Timestamp week_start = 0;
    double sc = 0.0;
    ScClass classification = ScClass::none;
};

inline constexpr Timestamp kWeek = 7 * 24 * 3600;

/// Region x week case counts. Cells may be missing when built from rows;
/// from_events fills every cell.
class CasePanel {
public:
    CasePanel(std::vector<std::string> region_ids, std::vector<Timestamp> week_starts);

    /// 7-day buckets from the first case timestamp; every region/week present.
    static CasePanel from_events(const std::vector<pkg::CaseEvent>& cases, const std::vector<geo::Region>& regions);

    void set(const std::string& region, Timestamp week_start, double count);
    const std::vector<std::string>& region_ids() const { return regions_; }
    const std::vector<Timestamp>& week_starts() const { return weeks_; }

    /// Values of one week in region order; names the first gap if any cell is missing.
    std::vector<double> week_values(std::size_t week) const;
    double at(std::size_t region, std::size_t week) const;

private:
    std::vector<std::string> regions_;
    std::vector<Timestamp> weeks_;
    std::vector<double> values_;
    std::vector<bool> present_;
};

/// One result per (week, metric), weeks ascending, metrics in enum order.
/// A metric whose adjacency has no edges (e.g. no routes) reports sc = 0 / none.
std::vector<ScResult> sc_panel(const CasePanel& panel, const std::vector<geo::Region>& regions,
                               const std::vector<geo::Route>& routes);

std::string panel_csv(const std::vector<ScResult>& results);
std::vector<ScResult> parse_panel_csv(const std::string& text, const std::string& source = "sc_panel");

}  // namespace mobepi::stats
