#include <doctest.h>

#include <cmath>
#include <random>

#include "mobepi/dataio.hpp"
#include "mobepi/fogsim.hpp"

using namespace mobepi;
using namespace mobepi::fog;

namespace {

const std::string kRefConf = std::string(MOBEPI_SOURCE_DIR) + "/data/fog_reference.conf";
const std::string kGolden = std::string(MOBEPI_SOURCE_DIR) + "/tests/golden/fog_sweep.csv";

FogScenario random_scenario(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.1, 2.0);
    FogScenario s;
    s.delay_mob = u(rng);
    s.delay_h = u(rng);
    s.delay_c = u(rng);
    for (int k = 0; k < 3; ++k) s.uplinks.push_back({u(rng) * 1e6, u(rng) * 1e7, u(rng) / 10});
    for (int k = 0; k < 2; ++k) s.downlinks.push_back({u(rng) * 1e5, u(rng) * 1e7, u(rng) / 10});
    s.phone_uplinks = 2;
    s.phone_downlinks = 1;
    s.d_mob = u(rng) * 1e6;
    s.s_mob = u(rng) * 1e8;
    s.d_fog = u(rng) * 1e6;
    s.s_fog = u(rng) * 1e9;
    s.d_cloud = u(rng) * 1e6;
    s.s_cloud = u(rng) * 1e9;
    s.p_t = u(rng);
    s.p_r = u(rng);
    s.p_a = u(rng);
    s.p_i = u(rng);
    return s;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("delay examples") {
    FogScenario s;
    CHECK(delay_total(s).total == 0.0);
    s.delay_mob = 0.1;
    s.delay_h = 0.5;
    s.delay_c = 0.3;
    CHECK(delay_total(s).ca == doctest::Approx(0.6));
    s.uplinks = {{1e7, 1e7, 0.1}};
    s.phone_uplinks = 1;
    const auto d = delay_total(s);
    CHECK(d.com == doctest::Approx(1.1));
    CHECK(d.total == doctest::Approx(1.7));
}

TEST_CASE("zero rate is an error") {
    FogScenario s;
    s.uplinks = {{1, 0, 0}};
    CHECK_THROWS_AS(delay_total(s), Error);
    s.uplinks = {{1, 1, 0}};
    s.phone_uplinks = 2;
    CHECK_THROWS_AS(power_total(s), Error);
    FogScenario t;
    t.s_fog = 0;
    CHECK_THROWS_AS(delay_total(t), Error);
}

TEST_CASE("power examples") {
    FogScenario s;
    s.p_a = 1;
    s.delay_mob = 0.1;
    s.p_r = 0.8;
    s.delay_h = 0.5;
    s.delay_c = 0.2;
    CHECK(power_total(s).ca == doctest::Approx(0.5));
    FogScenario z;
    z.delay_mob = 1;
    z.uplinks = {{5, 1, 0}};
    z.phone_uplinks = 1;
    CHECK(power_total(z).total == 0.0);
    // Phone owns every link: idle power never enters com.
    std::mt19937_64 rng(1);
    auto r = random_scenario(rng);
    r.phone_uplinks = r.uplinks.size();
    r.phone_downlinks = r.downlinks.size();
    const double before = power_total(r).com;
    r.p_i *= 7;
    CHECK(power_total(r).com == before);
}

TEST_CASE("breakdowns add up and match a term-by-term evaluation") {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 50; ++k) {
        const auto s = random_scenario(rng);
        double up_phone = 0, up_other = 0, down_phone = 0, down_other = 0;
        for (std::size_t i = 0; i < s.uplinks.size(); ++i)
            (i < s.phone_uplinks ? up_phone : up_other) += (1 + s.uplinks[i].failure) * s.uplinks[i].bits / s.uplinks[i].rate;
        for (std::size_t j = 0; j < s.downlinks.size(); ++j)
            (j < s.phone_downlinks ? down_phone : down_other) +=
                (1 + s.downlinks[j].failure) * s.downlinks[j].bits / s.downlinks[j].rate;
        const double wait = std::max(s.delay_h, s.delay_c);
        const auto d = delay_total(s);
        CHECK(close(d.ca, s.delay_mob + wait));
        CHECK(close(d.com, up_phone + up_other + down_phone + down_other));
        CHECK(close(d.pro, s.d_mob / s.s_mob + s.d_fog / s.s_fog + s.d_cloud / s.s_cloud));
        CHECK(d.total == d.ca + d.com + d.pro);
        const auto p = power_total(s);
        CHECK(close(p.ca, s.p_a * s.delay_mob + s.p_r * wait));
        CHECK(close(p.com, s.p_t * up_phone + s.p_r * down_phone + s.p_i * (up_other + down_other)));
        CHECK(close(p.pro, s.p_a * s.d_mob / s.s_mob + s.p_i * (s.d_fog / s.s_fog + s.d_cloud / s.s_cloud)));
        CHECK(p.total == p.ca + p.com + p.pro);
    }
}

TEST_CASE("linear in D, inverse-linear in R") {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 20; ++k) {
        auto s = random_scenario(rng);
        const double term = link_time(s.uplinks[1]);
        const double com = delay_total(s).com;
        auto doubled = s;
        doubled.uplinks[1].bits *= 2;
        CHECK(std::abs(delay_total(doubled).com - (com + term)) <= 1e-12);
        auto faster = s;
        faster.uplinks[1].rate *= 2;
        CHECK(std::abs(delay_total(faster).com - (com - term / 2)) <= 1e-12);
        auto heavier = s;
        heavier.d_fog *= 3;
        CHECK(std::abs(delay_total(heavier).pro - (delay_total(s).pro + 2 * s.d_fog / s.s_fog)) <= 1e-12);
    }
}

TEST_CASE("compare_architectures") {
    std::mt19937_64 rng(4);
    const auto a = random_scenario(rng);
    const auto same = compare_architectures(a, a);
    CHECK(same.delay_reduction_pct == 0.0);
    CHECK(same.power_reduction_pct == 0.0);

    auto worse = a;
    worse.d_fog *= 2;
    worse.uplinks[0].bits *= 2;
    const auto dom = compare_architectures(worse, a);
    CHECK(dom.delay_reduction_pct <= 0);
    CHECK(dom.power_reduction_pct <= 0);

    for (int k = 0; k < 20; ++k) {
        const auto x = random_scenario(rng), y = random_scenario(rng);
        const auto xy = compare_architectures(x, y), yx = compare_architectures(y, x);
        CHECK(xy.delay_reduction_pct == doctest::Approx(-yx.delay_reduction_pct / (1 - yx.delay_reduction_pct / 100)));
        CHECK(xy.power_reduction_pct == doctest::Approx(-yx.power_reduction_pct / (1 - yx.power_reduction_pct / 100)));
    }
    FogScenario zero;
    CHECK_THROWS_AS(compare_architectures(a, zero), Error);
}

TEST_CASE("reference sweep matches the golden file and stays in the bands") {
    const auto p = load_pipeline(kRefConf);
    const auto rows = sweep(p);
    const auto golden = parse_sweep_csv(io::read_file(kGolden));
    REQUIRE(rows.size() == 100);
    REQUIRE(golden.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(close(rows[i].fog_delay_s, golden[i].fog_delay_s));
        CHECK(close(rows[i].cloud_delay_s, golden[i].cloud_delay_s));
        CHECK(close(rows[i].fog_energy_j, golden[i].fog_energy_j));
        CHECK(close(rows[i].cloud_energy_j, golden[i].cloud_energy_j));
        CHECK(rows[i].delay_reduction_pct >= 21.0);
        CHECK(rows[i].delay_reduction_pct <= 60.0);
        CHECK(rows[i].power_reduction_pct >= 19.0);
        CHECK(rows[i].power_reduction_pct <= 50.0);
    }
    // 1 MB by hand: ca 0.25, com 0.168 + 0.00816 + 2 * 0.000816, pro 0.016 + 0.004 + 0.0002.
    CHECK(rows[0].fog_delay_s == doctest::Approx(0.447992).epsilon(1e-12));
    CHECK(sweep_csv(rows) == io::read_file(kGolden));
}

TEST_CASE("pipeline file parsing") {
    const auto p = load_pipeline(kRefConf);
    CHECK(p.lan_rate == 50e6);
    CHECK(parse_pipeline(format_pipeline(p)).s_cloud == p.s_cloud);
    CHECK_THROWS_AS(parse_pipeline("mobepi-fog v1\nwarp_speed = 9\n"), Error);
    CHECK_THROWS_AS(parse_pipeline("not a header\n"), Error);
    CHECK_THROWS_AS(parse_pipeline("mobepi-fog v1\nlan_rate = 0\n"), Error);
    CHECK(parse_pipeline("mobepi-fog v1\n# nothing\n").p_a == PipelineParams{}.p_a);
}
