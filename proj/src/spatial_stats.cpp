#include "mobepi/spatial_stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace mobepi::stats {

const char* to_string(ScClass c) {
    switch (c) {
    case ScClass::none: return "none";
    case ScClass::positive: return "positive";
    case ScClass::negative: return "negative";
    }
    return "none";
}

namespace {

void check_shapes(std::span<const double> values, const geo::AdjacencyMatrix& w) {
    require(values.size() >= 2, "moran_sc needs at least 2 regions");
    require(w.n() == values.size() && w.w.size() == values.size() * values.size(),
            "weights must be square and match the value count");
}

}  // namespace

double moran_sc_serial(std::span<const double> values, const geo::AdjacencyMatrix& weights) {
    check_shapes(values, weights);
    const std::size_t n = values.size();
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);

    double wsum = 0.0, cross = 0.0, dev2 = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        dev2 += (values[a] - mean) * (values[a] - mean);
        for (std::size_t b = 0; b < n; ++b) {
            wsum += weights.at(a, b);
            cross += weights.at(a, b) * (values[a] - mean) * (values[b] - mean);
        }
    }
    if (wsum == 0.0) fail(ErrorKind::invalid_input, "adjacency has no edges (sum of weights is 0)");
    if (dev2 == 0.0) return 0.0;
    return (static_cast<double>(n) / wsum) * (cross / dev2);
}

double moran_sc(std::span<const double> values, const geo::AdjacencyMatrix& weights) {
    check_shapes(values, weights);
    const auto n = static_cast<std::ptrdiff_t>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);

    std::vector<double> dev(values.size());
    double dev2 = 0.0;
    for (std::ptrdiff_t a = 0; a < n; ++a) {
        dev[a] = values[a] - mean;
        dev2 += dev[a] * dev[a];
    }

    double wsum = 0.0, cross = 0.0;
    const double* w = weights.w.data();
#pragma omp parallel for reduction(+ : wsum, cross) schedule(static) if (n >= 256)
    for (std::ptrdiff_t a = 0; a < n; ++a) {
        double row_w = 0.0, row_cross = 0.0;
        const double* row = w + a * n;
        for (std::ptrdiff_t b = 0; b < n; ++b) {
            row_w += row[b];
            row_cross += row[b] * dev[b];
        }
        wsum += row_w;
        cross += dev[a] * row_cross;
    }
    if (wsum == 0.0) fail(ErrorKind::invalid_input, "adjacency has no edges (sum of weights is 0)");
    if (dev2 == 0.0) return 0.0;
    return (static_cast<double>(n) / wsum) * (cross / dev2);
}

ScClass classify_sc(double sc) {
    require(std::isfinite(sc), "spatial correlation value is not finite");
    if (sc > 0) return ScClass::positive;
    if (sc < 0) return ScClass::negative;
    return ScClass::none;
}

CasePanel::CasePanel(std::vector<std::string> region_ids, std::vector<Timestamp> week_starts)
    : regions_(std::move(region_ids)),
      weeks_(std::move(week_starts)),
      values_(regions_.size() * weeks_.size(), 0.0),
      present_(regions_.size() * weeks_.size(), false) {
    require(std::is_sorted(weeks_.begin(), weeks_.end()), "week starts must be ascending");
}

CasePanel CasePanel::from_events(const std::vector<pkg::CaseEvent>& cases, const std::vector<geo::Region>& regions) {
    std::vector<std::string> ids;
    for (const auto& r : regions) ids.push_back(r.id);
    if (cases.empty()) return CasePanel(ids, {});
    Timestamp first = cases.front().t, last = cases.front().t;
    for (const auto& c : cases) {
        first = std::min(first, c.t);
        last = std::max(last, c.t);
    }
    std::vector<Timestamp> weeks;
    for (Timestamp w = first; w <= last; w += kWeek) weeks.push_back(w);
    CasePanel panel(ids, weeks);
    std::fill(panel.present_.begin(), panel.present_.end(), true);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
    for (const auto& c : cases) {
        auto it = index.find(c.region_id);
        if (it == index.end()) fail(ErrorKind::not_found, "case references unknown region " + c.region_id);
        const auto week = static_cast<std::size_t>((c.t - first) / kWeek);
        panel.values_[it->second * weeks.size() + week] += c.count;
    }
    return panel;
}

void CasePanel::set(const std::string& region, Timestamp week_start, double count) {
    const auto r = std::find(regions_.begin(), regions_.end(), region);
    const auto w = std::find(weeks_.begin(), weeks_.end(), week_start);
    if (r == regions_.end()) fail(ErrorKind::not_found, "panel has no region " + region);
    if (w == weeks_.end()) fail(ErrorKind::not_found, "panel has no week starting at " + std::to_string(week_start));
    const auto k = static_cast<std::size_t>(r - regions_.begin()) * weeks_.size() +
                   static_cast<std::size_t>(w - weeks_.begin());
    values_[k] = count;
    present_[k] = true;
}

double CasePanel::at(std::size_t region, std::size_t week) const { return values_[region * weeks_.size() + week]; }

std::vector<double> CasePanel::week_values(std::size_t week) const {
    std::vector<double> out(regions_.size());
    for (std::size_t r = 0; r < regions_.size(); ++r) {
        if (!present_[r * weeks_.size() + week])
            fail(ErrorKind::invalid_input, "case panel gap: region " + regions_[r] + " has no count for week " +
                                               std::to_string(weeks_[week]));
        out[r] = at(r, week);
    }
    return out;
}

std::vector<ScResult> sc_panel(const CasePanel& panel, const std::vector<geo::Region>& regions,
                               const std::vector<geo::Route>& routes) {
    require(regions.size() == panel.region_ids().size(), "panel and region list differ in size");
    for (std::size_t i = 0; i < regions.size(); ++i)
        require(regions[i].id == panel.region_ids()[i], "panel region order must match the region list");

    std::vector<geo::AdjacencyMatrix> matrices;
    for (auto m : geo::kAllMetrics) matrices.push_back(geo::adjacency_matrix(regions, m, routes));

    const std::size_t weeks = panel.week_starts().size();
    std::vector<std::vector<double>> values(weeks);
    for (std::size_t w = 0; w < weeks; ++w) values[w] = panel.week_values(w);

    std::vector<ScResult> out(weeks * matrices.size());
    const auto cells = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < cells; ++k) {
        const auto w = static_cast<std::size_t>(k) / matrices.size();
        const auto m = static_cast<std::size_t>(k) % matrices.size();
        ScResult r;
        r.metric = matrices[m].metric;
        r.week_start = panel.week_starts()[w];
        r.sc = matrices[m].total() == 0.0 ? 0.0 : moran_sc_serial(values[w], matrices[m]);
        r.classification = classify_sc(r.sc);
        out[static_cast<std::size_t>(k)] = r;
    }
    return out;
}

std::string panel_csv(const std::vector<ScResult>& results) {
    std::ostringstream os;
    os << "metric,week_start,sc,classification\n";
    for (const auto& r : results)
        os << geo::to_string(r.metric) << ',' << r.week_start << ',' << format_double(r.sc) << ','
           << to_string(r.classification) << '\n';
    return os.str();
}

std::vector<ScResult> parse_panel_csv(const std::string& text, const std::string& source) {
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    std::vector<ScResult> out;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        if (lineno == 1) {
            if (trim(line) != "metric,week_start,sc,classification")
                fail(ErrorKind::parse, source + ":1: expected header 'metric,week_start,sc,classification'");
            continue;
        }
        try {
            const auto f = split(trim(line), ',');
            if (f.size() != 4) fail(ErrorKind::parse, "expected 4 fields");
            ScResult r;
            r.metric = geo::parse_metric(trim(f[0]));
            r.week_start = parse_int(f[1]);
            r.sc = parse_double(f[2]);
            r.classification = classify_sc(r.sc);
            if (trim(f[3]) != to_string(r.classification)) fail(ErrorKind::parse, "classification does not match sc");
            out.push_back(r);
        } catch (const Error& e) {
            fail(e.kind(), source + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (lineno == 0) fail(ErrorKind::parse, source + ": empty panel file");
    return out;
}

}  // namespace mobepi::stats
