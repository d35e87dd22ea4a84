// Serial reference vs OpenMP kernel timings. Each pair is also checked for
// agreement so a fast-but-wrong kernel shows up here too.
#include <omp.h>

#include <chrono>
#include <cmath>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>

#include "mobepi/geo.hpp"
#include "mobepi/hotspot_net.hpp"
#include "mobepi/pkg_bench.hpp"
#include "mobepi/spatial_stats.hpp"

using namespace mobepi;

namespace {

template <class F>
double best_of(int repeats, F&& f) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

nlohmann::json row(const std::string& name, double serial, double parallel, double max_diff) {
    return {{"kernel", name}, {"serial_s", serial}, {"parallel_s", parallel},
            {"speedup", parallel > 0 ? serial / parallel : 0.0}, {"max_abs_diff", max_diff}};
}

nlohmann::json bench_moran(std::size_t side, int repeats) {
    const auto regions = geo::build_grid(geo::bbox_from_meters({22.5, 88.3}, side * 1000.0, side * 1000.0), 1000);
    const auto w = geo::adjacency_matrix(regions, geo::AdjacencyMetric::shared_border);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd(0, 1);
    std::vector<double> v(regions.size());
    for (auto& x : v) x = nd(rng);
    double a = 0, b = 0;
    const double ts = best_of(repeats, [&] { a = stats::moran_sc_serial(v, w); });
    const double tp = best_of(repeats, [&] { b = stats::moran_sc(v, w); });
    return row("moran_" + std::to_string(side) + "x" + std::to_string(side), ts, tp, std::abs(a - b));
}

nlohmann::json bench_gradient(std::size_t batch_size, std::size_t hidden, int repeats) {
    net::NetShape sh;
    sh.locations = 50;
    sh.hidden = hidden;
    const auto params = net::NetParams::random(sh, 2);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0, 1);
    std::vector<net::RegionSample> samples(batch_size);
    for (auto& s : samples) {
        for (int t = 0; t < 8; ++t)
            s.steps.push_back({rng() % sh.locations, rng() % 7, rng() % 24, rng() % 6, (rng() % 4) / 4.0});
        for (std::size_t k = 0; k < sh.context; ++k) s.context.push_back(nd(rng));
        s.label = static_cast<net::HotspotClass>(rng() % net::kNumClasses);
    }
    std::vector<const net::RegionSample*> batch;
    for (const auto& s : samples) batch.push_back(&s);
    auto gs = net::NetParams::zeros(sh), gp = net::NetParams::zeros(sh);
    const net::ForwardOptions opts;
    const double ts = best_of(repeats, [&] {
        gs = net::NetParams::zeros(sh);
        net::batch_loss_and_gradient_serial(batch, params, opts, gs);
    });
    const double tp = best_of(repeats, [&] {
        gp = net::NetParams::zeros(sh);
        net::batch_loss_and_gradient(batch, params, opts, gp);
    });
    double diff = 0;
    const auto a = gs.tensors();
    const auto b = gp.tensors();
    for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, (*a[i].second - *b[i].second).cwiseAbs().maxCoeff());
    return row("batch_gradient_b" + std::to_string(batch_size) + "_h" + std::to_string(hidden), ts, tp, diff);
}

nlohmann::json bench_pkg(std::size_t entities, std::size_t queries) {
    pkg::BenchConfig cfg;
    cfg.entities = entities;
    cfg.queries = queries;
    const auto r = pkg::run_query_bench(cfg);
    auto j = row("pkg_query_" + std::to_string(entities), r.query_serial_s, r.query_s, 0.0);
    j["facts"] = r.facts;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs OpenMP kernel timings"};
    int repeats = 3;
    std::size_t side = 60, batch = 64, hidden = 64, entities = 20000, queries = 5000;
    app.add_option("--repeats", repeats)->check(CLI::PositiveNumber);
    app.add_option("--grid", side, "Moran grid side in cells")->check(CLI::PositiveNumber);
    app.add_option("--batch", batch)->check(CLI::PositiveNumber);
    app.add_option("--hidden", hidden)->check(CLI::PositiveNumber);
    app.add_option("--entities", entities)->check(CLI::PositiveNumber);
    app.add_option("--queries", queries)->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    nlohmann::json out = {{"threads", omp_get_max_threads()}};
    out["results"] = {bench_moran(side, repeats), bench_gradient(batch, hidden, repeats), bench_pkg(entities, queries)};
    std::cout << out.dump(1) << "\n";
    return 0;
}
