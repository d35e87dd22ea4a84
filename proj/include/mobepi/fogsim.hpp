#pragma once

#include <string>
#include <vector>

#include "mobepi/common.hpp"

namespace mobepi::fog {

struct Link {
    double bits = 0.0;     // D
    double rate = 1.0;     // R, bits/s
    double failure = 0.0;  // f, expected retry fraction
};

/// Every term of the health-reporting pipeline. The first `phone_uplinks`
/// uplinks and the first `phone_downlinks` downlinks belong to the smartphone.
/// A cloud-only pipeline sets d_fog = 0.
struct FogScenario {
    double delay_mob = 0.0;
    double delay_h = 0.0;
    double delay_c = 0.0;
    std::vector<Link> uplinks;
    std::size_t phone_uplinks = 0;  // k
    std::vector<Link> downlinks;
    std::size_t phone_downlinks = 0;  // q
    double d_mob = 0.0, s_mob = 1.0;
    double d_fog = 0.0, s_fog = 1.0;
    double d_cloud = 0.0, s_cloud = 1.0;
    double p_t = 0.0, p_r = 0.0, p_a = 0.0, p_i = 0.0;  // watts
};

void validate(const FogScenario& s);

struct Breakdown {
    double ca = 0.0;
    double com = 0.0;
    double pro = 0.0;
    double total = 0.0;
};

/// (1 + f) * D / R
double link_time(const Link& l);

/// Seconds. ca = delay_mob + max(delay_h, delay_c); com sums every link;
/// pro = D_mob/S_mob + D_f/S_f + D_c/S_c.
Breakdown delay_total(const FogScenario& s);

/// Smartphone joules. Links not owned by the phone are charged at idle power,
/// one after another.
Breakdown power_total(const FogScenario& s);

struct Comparison {
    double delay_reduction_pct = 0.0;
    double power_reduction_pct = 0.0;
};

/// 100 * (cloud - fog) / cloud for total delay and total power.
Comparison compare_architectures(const FogScenario& fog, const FogScenario& cloud_only);

/// Parameters of the two pipelines evaluated per payload size.
///   fog:   phone -LAN-> fog node -WAN-> cloud; fog node processes the payload
///          and forwards a reduced share; result returns over WAN then the
///          phone downlink.
///   cloud: phone -cellular-> cloud; the cloud also does the fog node's work.
struct PipelineParams {
    double delay_mob = 0.05;
    double delay_h = 0.2;
    double delay_c = 0.1;
    double lan_rate = 50e6;
    double lan_failure = 0.05;
    double wan_rate = 100e6;
    double wan_failure = 0.02;
    double cell_rate = 25e6;
    double cell_failure = 0.1;
    double result_bits = 8e4;
    double phone_downlink_rate = 100e6;
    double cell_downlink_rate = 40e6;
    double downlink_failure = 0.02;
    double fog_reduction = 0.1;    // share of the payload the fog node forwards
    double mobile_fraction = 1.0;  // share of the payload handled on the phone
    double s_mob = 5e8;
    double s_fog = 2e9;
    double s_cloud = 4e9;
    double p_t = 1.0;
    double p_r = 0.8;
    double p_a = 2.5;
    double p_i = 0.5;
    double bits_per_mb = 8e6;
    int sweep_first_mb = 1;
    int sweep_last_mb = 100;
    int sweep_step_mb = 1;
};

void validate(const PipelineParams& p);

FogScenario fog_scenario(const PipelineParams& p, double payload_bits);
FogScenario cloud_scenario(const PipelineParams& p, double payload_bits);

struct SweepRow {
    double payload_bits = 0.0;
    double fog_delay_s = 0.0;
    double cloud_delay_s = 0.0;
    double delay_reduction_pct = 0.0;
    double fog_energy_j = 0.0;
    double cloud_energy_j = 0.0;
    double power_reduction_pct = 0.0;
};

std::vector<SweepRow> sweep(const PipelineParams& p);

inline constexpr const char* kSweepHeader =
    "payload_bits,fog_delay_s,cloud_delay_s,delay_reduction_pct,fog_energy_j,cloud_energy_j,power_reduction_pct";

std::string sweep_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);

/// "mobepi-fog v1" header, then `key = value` lines; '#' starts a comment.
/// Unknown keys are errors; missing keys keep their defaults.
PipelineParams parse_pipeline(const std::string& text);
PipelineParams load_pipeline(const std::string& path);
std::string format_pipeline(const PipelineParams& p);

}  // namespace mobepi::fog
