#include "mobepi/fogsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace mobepi::fog {

namespace {

void positive(double v, const char* what) {
    if (!(std::isfinite(v) && v > 0)) fail(ErrorKind::invalid_input, std::string(what) + " must be > 0");
}

void non_negative(double v, const char* what) {
    if (!(std::isfinite(v) && v >= 0)) fail(ErrorKind::invalid_input, std::string(what) + " must be >= 0");
}

double sum_time(const std::vector<Link>& links, std::size_t first, std::size_t last) {
    double s = 0.0;
    for (std::size_t i = first; i < last; ++i) s += link_time(links[i]);
    return s;
}

}  // namespace

void validate(const FogScenario& s) {
    non_negative(s.delay_mob, "delay_mob");
    non_negative(s.delay_h, "delay_h");
    non_negative(s.delay_c, "delay_c");
    for (const auto* links : {&s.uplinks, &s.downlinks})
        for (const Link& l : *links) {
            non_negative(l.bits, "link data size");
            positive(l.rate, "link rate");
            non_negative(l.failure, "link failure rate");
        }
    require(s.phone_uplinks <= s.uplinks.size(), "smartphone uplink count exceeds the number of uplinks");
    require(s.phone_downlinks <= s.downlinks.size(), "smartphone downlink count exceeds the number of downlinks");
    non_negative(s.d_mob, "D_mob");
    non_negative(s.d_fog, "D_f");
    non_negative(s.d_cloud, "D_c");
    positive(s.s_mob, "S_mob");
    positive(s.s_fog, "S_f");
    positive(s.s_cloud, "S_c");
    non_negative(s.p_t, "P_t");
    non_negative(s.p_r, "P_r");
    non_negative(s.p_a, "P_a");
    non_negative(s.p_i, "P_i");
}

double link_time(const Link& l) { return (1.0 + l.failure) * (l.bits / l.rate); }

Breakdown delay_total(const FogScenario& s) {
    validate(s);
    Breakdown b;
    b.ca = s.delay_mob + std::max(s.delay_h, s.delay_c);
    b.com = sum_time(s.uplinks, 0, s.uplinks.size()) + sum_time(s.downlinks, 0, s.downlinks.size());
    b.pro = s.d_mob / s.s_mob + s.d_fog / s.s_fog + s.d_cloud / s.s_cloud;
    b.total = b.ca + b.com + b.pro;
    return b;
}

Breakdown power_total(const FogScenario& s) {
    validate(s);
    Breakdown b;
    b.ca = s.p_a * s.delay_mob + s.p_r * std::max(s.delay_h, s.delay_c);
    b.com = s.p_t * sum_time(s.uplinks, 0, s.phone_uplinks) + s.p_r * sum_time(s.downlinks, 0, s.phone_downlinks) +
            s.p_i * sum_time(s.uplinks, s.phone_uplinks, s.uplinks.size()) +
            s.p_i * sum_time(s.downlinks, s.phone_downlinks, s.downlinks.size());
    b.pro = s.p_a * (s.d_mob / s.s_mob) + s.p_i * (s.d_fog / s.s_fog) + s.p_i * (s.d_cloud / s.s_cloud);
    b.total = b.ca + b.com + b.pro;
    return b;
}

Comparison compare_architectures(const FogScenario& fog, const FogScenario& cloud_only) {
    const Breakdown fd = delay_total(fog), cd = delay_total(cloud_only);
    const Breakdown fp = power_total(fog), cp = power_total(cloud_only);
    if (cd.total == 0.0) fail(ErrorKind::invalid_input, "cloud-only total delay is 0");
    if (cp.total == 0.0) fail(ErrorKind::invalid_input, "cloud-only total power is 0");
    return {100.0 * (cd.total - fd.total) / cd.total, 100.0 * (cp.total - fp.total) / cp.total};
}

void validate(const PipelineParams& p) {
    non_negative(p.delay_mob, "delay_mob");
    non_negative(p.delay_h, "delay_h");
    non_negative(p.delay_c, "delay_c");
    for (double r : {p.lan_rate, p.wan_rate, p.cell_rate, p.phone_downlink_rate, p.cell_downlink_rate, p.s_mob,
                     p.s_fog, p.s_cloud, p.bits_per_mb})
        positive(r, "rates, speeds and bits_per_mb");
    for (double f : {p.lan_failure, p.wan_failure, p.cell_failure, p.downlink_failure})
        non_negative(f, "failure rates");
    non_negative(p.result_bits, "result_bits");
    non_negative(p.fog_reduction, "fog_reduction");
    non_negative(p.mobile_fraction, "mobile_fraction");
    for (double w : {p.p_t, p.p_r, p.p_a, p.p_i}) non_negative(w, "power states");
    require(p.sweep_first_mb >= 1 && p.sweep_last_mb >= p.sweep_first_mb && p.sweep_step_mb >= 1,
            "sweep range must satisfy 1 <= first <= last with step >= 1");
}

FogScenario fog_scenario(const PipelineParams& p, double payload_bits) {
    FogScenario s;
    s.delay_mob = p.delay_mob;
    s.delay_h = p.delay_h;
    s.delay_c = p.delay_c;
    s.uplinks = {{payload_bits, p.lan_rate, p.lan_failure}, {payload_bits * p.fog_reduction, p.wan_rate, p.wan_failure}};
    s.phone_uplinks = 1;
    s.downlinks = {{p.result_bits, p.phone_downlink_rate, p.downlink_failure},
                   {p.result_bits, p.wan_rate, p.wan_failure}};
    s.phone_downlinks = 1;
    s.d_mob = payload_bits * p.mobile_fraction;
    s.s_mob = p.s_mob;
    s.d_fog = payload_bits;
    s.s_fog = p.s_fog;
    s.d_cloud = payload_bits * p.fog_reduction;
    s.s_cloud = p.s_cloud;
    s.p_t = p.p_t;
    s.p_r = p.p_r;
    s.p_a = p.p_a;
    s.p_i = p.p_i;
    return s;
}

FogScenario cloud_scenario(const PipelineParams& p, double payload_bits) {
    FogScenario s = fog_scenario(p, payload_bits);
    s.uplinks = {{payload_bits, p.cell_rate, p.cell_failure}};
    s.phone_uplinks = 1;
    s.downlinks = {{p.result_bits, p.cell_downlink_rate, p.downlink_failure}};
    s.phone_downlinks = 1;
    s.d_cloud = s.d_fog + s.d_cloud;
    s.d_fog = 0.0;
    return s;
}

std::vector<SweepRow> sweep(const PipelineParams& p) {
    validate(p);
    std::vector<int> mbs;
    for (int mb = p.sweep_first_mb; mb <= p.sweep_last_mb; mb += p.sweep_step_mb) mbs.push_back(mb);
    std::vector<SweepRow> rows(mbs.size());
    const auto n = static_cast<std::ptrdiff_t>(mbs.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double bits = mbs[static_cast<std::size_t>(i)] * p.bits_per_mb;
        const FogScenario f = fog_scenario(p, bits), c = cloud_scenario(p, bits);
        SweepRow& r = rows[static_cast<std::size_t>(i)];
        r.payload_bits = bits;
        r.fog_delay_s = delay_total(f).total;
        r.cloud_delay_s = delay_total(c).total;
        r.fog_energy_j = power_total(f).total;
        r.cloud_energy_j = power_total(c).total;
        const Comparison cmp = compare_architectures(f, c);
        r.delay_reduction_pct = cmp.delay_reduction_pct;
        r.power_reduction_pct = cmp.power_reduction_pct;
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << kSweepHeader << '\n';
    for (const auto& r : rows)
        os << format_double(r.payload_bits) << ',' << format_double(r.fog_delay_s) << ','
           << format_double(r.cloud_delay_s) << ',' << format_double(r.delay_reduction_pct) << ','
           << format_double(r.fog_energy_j) << ',' << format_double(r.cloud_energy_j) << ','
           << format_double(r.power_reduction_pct) << '\n';
    return os.str();
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || trim(line) != kSweepHeader) fail(ErrorKind::parse, "sweep CSV: unexpected header");
    std::vector<SweepRow> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split(trim(line), ',');
        if (f.size() != 7) fail(ErrorKind::parse, "sweep CSV line " + std::to_string(lineno) + ": expected 7 fields");
        try {
            rows.push_back({parse_double(f[0]), parse_double(f[1]), parse_double(f[2]), parse_double(f[3]),
                            parse_double(f[4]), parse_double(f[5]), parse_double(f[6])});
        } catch (const Error& e) {
            fail(ErrorKind::parse, "sweep CSV line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

namespace {

struct Field {
    double PipelineParams::*d = nullptr;
    int PipelineParams::*i = nullptr;
};

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> f = {
        {"delay_mob", {&PipelineParams::delay_mob}},
        {"delay_h", {&PipelineParams::delay_h}},
        {"delay_c", {&PipelineParams::delay_c}},
        {"lan_rate", {&PipelineParams::lan_rate}},
        {"lan_failure", {&PipelineParams::lan_failure}},
        {"wan_rate", {&PipelineParams::wan_rate}},
        {"wan_failure", {&PipelineParams::wan_failure}},
        {"cell_rate", {&PipelineParams::cell_rate}},
        {"cell_failure", {&PipelineParams::cell_failure}},
        {"result_bits", {&PipelineParams::result_bits}},
        {"phone_downlink_rate", {&PipelineParams::phone_downlink_rate}},
        {"cell_downlink_rate", {&PipelineParams::cell_downlink_rate}},
        {"downlink_failure", {&PipelineParams::downlink_failure}},
        {"fog_reduction", {&PipelineParams::fog_reduction}},
        {"mobile_fraction", {&PipelineParams::mobile_fraction}},
        {"s_mob", {&PipelineParams::s_mob}},
        {"s_fog", {&PipelineParams::s_fog}},
        {"s_cloud", {&PipelineParams::s_cloud}},
        {"p_t", {&PipelineParams::p_t}},
        {"p_r", {&PipelineParams::p_r}},
        {"p_a", {&PipelineParams::p_a}},
        {"p_i", {&PipelineParams::p_i}},
        {"bits_per_mb", {&PipelineParams::bits_per_mb}},
        {"sweep_first_mb", {nullptr, &PipelineParams::sweep_first_mb}},
        {"sweep_last_mb", {nullptr, &PipelineParams::sweep_last_mb}},
        {"sweep_step_mb", {nullptr, &PipelineParams::sweep_step_mb}},
    };
    return f;
}

}  // namespace

PipelineParams parse_pipeline(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    PipelineParams p;
    while (std::getline(is, line)) {
        ++lineno;
        auto body = std::string(trim(line.substr(0, line.find('#'))));
        if (body.empty()) continue;
        if (!header) {
            if (body != "mobepi-fog v1")
                fail(ErrorKind::parse, "scenario line " + std::to_string(lineno) + ": expected header 'mobepi-fog v1'");
            header = true;
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::parse, "scenario line " + std::to_string(lineno) + ": expected key = value");
        const std::string key(trim(std::string_view(body).substr(0, eq)));
        const std::string_view value = trim(std::string_view(body).substr(eq + 1));
        const auto it = fields().find(key);
        if (it == fields().end())
            fail(ErrorKind::parse, "scenario line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        try {
            if (it->second.d)
                p.*(it->second.d) = parse_double(value);
            else
                p.*(it->second.i) = static_cast<int>(parse_int(value));
        } catch (const Error& e) {
            fail(ErrorKind::parse, "scenario line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!header) fail(ErrorKind::parse, "scenario file is empty");
    validate(p);
    return p;
}

PipelineParams load_pipeline(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::io, "cannot read " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    try {
        return parse_pipeline(ss.str());
    } catch (const Error& e) {
        fail(e.kind(), path + ": " + e.what());
    }
}

std::string format_pipeline(const PipelineParams& p) {
    std::ostringstream os;
    os << "mobepi-fog v1\n";
    for (const auto& [key, f] : fields())
        os << key << " = " << (f.d ? format_double(p.*(f.d)) : std::to_string(p.*(f.i))) << '\n';
    return os.str();
}

}  // namespace mobepi::fog
