#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mobepi/dataio.hpp"
#include "mobepi/fogsim.hpp"
#include "mobepi/health.hpp"
#include "mobepi/hotspot_net.hpp"
#include "mobepi/patterns.hpp"
#include "mobepi/pkg_bench.hpp"
#include "mobepi/spatial_stats.hpp"

namespace fs = std::filesystem;
using namespace mobepi;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr const char* kPkgFile = "pkg.txt";
constexpr const char* kPanelFile = "sc_panel.csv";
constexpr const char* kModelFile = "model.params";
constexpr const char* kModelMeta = "model.json";

enum class Level { debug, info, warn, error };

Level log_level() {
    const char* env = std::getenv("MOBEPI_LOG");
    const std::string v = env ? env : "info";
    if (v == "debug") return Level::debug;
    if (v == "warn") return Level::warn;
    if (v == "error") return Level::error;
    return Level::info;
}

void log(Level l, const std::string& msg) {
    static const Level threshold = log_level();
    static const char* names[] = {"debug", "info", "warn", "error"};
    if (l >= threshold) std::cerr << "[" << names[static_cast<int>(l)] << "] " << msg << "\n";
}

/// Tracks the files one invocation reads and writes. Every write goes through
/// write(), which only accepts plain file names inside the output directory.
struct Run {
    std::string subcommand;
    std::string in_dir, out_dir;
    std::uint64_t seed = 0;
    json params = json::object();
    std::vector<std::string> inputs, outputs;

    std::string input(const std::string& name) const { return (fs::path(in_dir) / name).string(); }

    std::string read(const std::string& path) {
        inputs.push_back(path);
        return io::read_file(path);
    }

    void write(const std::string& name, const std::string& text) {
        if (name.empty() || name.find('/') != std::string::npos || name == "." || name == "..")
            fail(ErrorKind::invalid_input, "output name '" + name + "' must be a plain file name");
        fs::create_directories(out_dir);
        io::write_file((fs::path(out_dir) / name).string(), text);
        outputs.push_back(name);
        log(Level::debug, "wrote " + name);
    }

    void manifest() {
        json files = json::array();
        for (const auto& name : outputs) {
            const auto text = io::read_file((fs::path(out_dir) / name).string());
            files.push_back({{"file", name}, {"bytes", text.size()}, {"fnv1a", content_hash(text)}});
        }
        json in = json::array();
        for (const auto& path : inputs) {
            const auto text = io::read_file(path);
            in.push_back({{"path", path}, {"bytes", text.size()}, {"fnv1a", content_hash(text)}});
        }
        const json m = {{"tool", "mobepi"}, {"version", kVersion}, {"subcommand", subcommand},
                        {"seed", seed},     {"parameters", params}, {"inputs", in},
                        {"outputs", files}};
        fs::create_directories(out_dir);
        io::write_file((fs::path(out_dir) / ("manifest." + subcommand + ".json")).string(), m.dump(1) + "\n");
    }
};

io::Dataset load_data(Run& run) {
    for (const char* f : {io::kRegionsFile, io::kPlacesFile, io::kUsersFile, io::kTrajectoriesFile, io::kCasesFile,
                          io::kRoutesFile, io::kContextsFile})
        if (io::file_exists(run.input(f))) run.inputs.push_back(run.input(f));
    return io::load_dataset(run.in_dir);
}

pkg::PkgStore load_store(Run& run) {
    const auto path = run.input(kPkgFile);
    return io::parse_pkg(run.read(path), path);
}

std::vector<patterns::PatternInstance> load_patterns(Run& run) {
    std::vector<patterns::PatternInstance> out;
    for (const char* name : {"patterns_cascading.jsonl", "patterns_cooccurrence.jsonl"}) {
        const auto path = run.input(name);
        if (!io::file_exists(path)) continue;
        std::istringstream is(run.read(path));
        std::string line;
        while (std::getline(is, line))
            if (!trim(line).empty()) out.push_back(patterns::pattern_from_json_line(line));
    }
    return out;
}

std::vector<stats::ScResult> load_panel(Run& run) {
    const auto path = run.input(kPanelFile);
    return stats::parse_panel_csv(run.read(path), path);
}

Timestamp last_case_time(const io::Dataset& d) {
    require(!d.cases.empty(), "dataset has no cases");
    Timestamp t = d.cases.front().t;
    for (const auto& c : d.cases) t = std::max(t, c.t);
    return t;
}

/// Snapshot times every `step` seconds back from the last case, stopping one
/// week after the first case.
std::vector<Timestamp> snapshot_times(const io::Dataset& d, Timestamp step) {
    require(step > 0, "snapshot step must be positive");
    Timestamp first = d.cases.front().t;
    for (const auto& c : d.cases) first = std::min(first, c.t);
    std::vector<Timestamp> out;
    for (Timestamp t = last_case_time(d); t >= first + stats::kWeek; t -= step) out.push_back(t);
    if (out.empty()) out.push_back(last_case_time(d));
    std::reverse(out.begin(), out.end());
    return out;
}

std::string flags_text(const net::AblationFlags& f) {
    std::string s;
    auto add = [&](bool on, const char* name) {
        if (!on) return;
        if (!s.empty()) s += ",";
        s += name;
    };
    add(f.no_attention, "no_attention");
    add(f.no_bilstm, "no_bilstm");
    add(f.no_pkg_features, "no_pkg_features");
    add(f.no_two_phase, "no_two_phase");
    return s.empty() ? "full" : s;
}

// ---------------------------------------------------------------------------

void cmd_synth(Run& run, const io::ScenarioConfig& cfg) {
    const auto s = io::synthesize_scenario(cfg);
    const fs::path tmp = fs::path(run.out_dir);
    io::write_scenario(s, tmp.string());
    for (const char* f : {io::kRegionsFile, io::kPlacesFile, io::kUsersFile, io::kTrajectoriesFile, io::kCasesFile,
                          io::kRoutesFile, io::kContextsFile, "truth.json", "catalog.json"})
        run.outputs.push_back(f);
    log(Level::info, "synthesized " + std::to_string(s.data.users.size()) + " users, " +
                         std::to_string(s.data.cases.size()) + " case events");
}

void cmd_ingest(Run& run) {
    const auto d = load_data(run);
    io::save_dataset(d, run.out_dir);
    for (const char* f : {io::kRegionsFile, io::kPlacesFile, io::kUsersFile, io::kTrajectoriesFile, io::kCasesFile,
                          io::kRoutesFile, io::kContextsFile})
        run.outputs.push_back(f);
    std::size_t samples = 0;
    for (const auto& u : d.users) samples += u.trajectory.size();
    const json summary = {{"regions", d.regions.size()}, {"places", d.places.size()},
                          {"users", d.users.size()},     {"trajectory_samples", samples},
                          {"cases", d.cases.size()},     {"routes", d.routes.size()},
                          {"contexts", d.contexts.size()}};
    run.write("summary.json", summary.dump(1) + "\n");
}

struct DeriveOptions {
    int nu = 3;
    double stay_radius_m = 100.0;
    double stay_min_s = 600.0;
    Timestamp group_tol_s = 900;
    Timestamp flow_slot_s = pkg::kDefaultFlowSlot;
};

void cmd_derive(Run& run, const DeriveOptions& o) {
    const auto d = load_data(run);
    const auto visits = pkg::derive_visits_all(d.users, d.places, o.stay_radius_m, o.stay_min_s);
    const auto groups = pkg::derive_groups(visits, o.group_tol_s, 3);
    const auto flows = pkg::derive_flows(visits, o.nu, o.flow_slot_s);
    const auto hotspots = pkg::derive_hotspot_facts(d.cases, d.regions);
    Timestamp t0 = std::numeric_limits<Timestamp>::max();
    for (const auto& u : d.users)
        if (!u.trajectory.empty()) t0 = std::min(t0, u.trajectory.front().t);
    for (const auto& c : d.cases) t0 = std::min(t0, c.t);
    if (t0 == std::numeric_limits<Timestamp>::max()) t0 = 0;
    const auto routes = pkg::route_facts(d.routes, Interval::open(t0));
    pkg::PkgStore store;
    for (const auto* part : {&visits, &groups, &flows, &hotspots, &routes}) store.assert_all(*part);
    run.write(kPkgFile, io::format_pkg(store));
    const json counts = {{"visit", visits.size()}, {"group", groups.size()},    {"flow", flows.size()},
                         {"hotspot", hotspots.size()}, {"connectivity", routes.size()}, {"total", store.size()}};
    run.write("derive_summary.json", counts.dump(1) + "\n");
    log(Level::info, "derived " + std::to_string(store.size()) + " facts");
}

void cmd_mine(Run& run, patterns::PatternKind kind, double pi, const patterns::NeighborRelation& nr,
              std::size_t max_size) {
    const auto store = load_store(run);
    io::Dataset d;
    if (io::file_exists(run.input(io::kRegionsFile))) d = load_data(run);
    const auto locate = patterns::make_locator(d.places, d.regions);
    patterns::MinerConfig cfg;
    cfg.pi1 = cfg.pi2 = pi;
    cfg.max_size = max_size;
    const auto found = kind == patterns::PatternKind::cascading
                           ? patterns::mine_cascading(store, locate, nr, cfg)
                           : patterns::mine_cooccurrence(store, locate, d.contexts, nr, cfg);
    std::string text;
    for (const auto& p : found) text += patterns::to_json_line(p) + "\n";
    run.write(std::string("patterns_") + (kind == patterns::PatternKind::cascading ? "cascading" : "cooccurrence") +
                  ".jsonl",
              text);
    log(Level::info, "mined " + std::to_string(found.size()) + " " + patterns::to_string(kind) + " patterns");
}

void cmd_sc_panel(Run& run) {
    const auto d = load_data(run);
    const auto panel = stats::CasePanel::from_events(d.cases, d.regions);
    run.write(kPanelFile, stats::panel_csv(stats::sc_panel(panel, d.regions, d.routes)));
}

struct TrainOptions {
    net::TrainConfig cfg;
    Timestamp snapshot_step_s = 2 * 24 * 3600;
    std::size_t steps = 8;
};

std::vector<net::RegionSample> region_samples(Run& run, const io::Dataset& d, const std::vector<Timestamp>& times,
                                              std::size_t steps) {
    const auto store = load_store(run);
    const auto sc = load_panel(run);
    const auto pats = load_patterns(run);
    io::SampleOptions so;
    so.steps = steps;
    std::vector<net::RegionSample> out;
    for (Timestamp t : times) {
        auto part = io::build_region_samples(d, store, sc, pats, t, so);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

void cmd_train(Run& run, const TrainOptions& o) {
    const auto d = load_data(run);
    const auto times = snapshot_times(d, o.snapshot_step_s);
    const auto samples = region_samples(run, d, times, o.steps);
    log(Level::info, "training on " + std::to_string(samples.size()) + " samples from " +
                         std::to_string(times.size()) + " snapshots (" + flags_text(o.cfg.flags) + ")");
    const auto res = net::train(samples, d.regions.size(), o.cfg);
    std::string samples_text;
    for (const auto& s : samples) samples_text += net::sample_to_json_line(s) + "\n";
    run.write("train_samples.jsonl", samples_text);
    const auto tmp = (fs::path(run.out_dir) / kModelFile).string();
    fs::create_directories(run.out_dir);
    net::save_params(res.params, tmp);
    run.outputs.push_back(kModelFile);
    std::string curve = "epoch,loss\n";
    for (std::size_t e = 0; e < res.loss_curve.size(); ++e)
        curve += std::to_string(e + 1) + "," + format_double(res.loss_curve[e]) + "\n";
    run.write("loss_curve.csv", curve);
    std::vector<std::string> regions;
    for (const auto& r : d.regions) regions.push_back(r.id);
    const auto opts = net::options_for(o.cfg);
    const json meta = {{"regions", regions},
                       {"steps", o.steps},
                       {"snapshots", times},
                       {"air_attention_bias", o.cfg.air_attention_bias},
                       {"no_attention", o.cfg.flags.no_attention},
                       {"no_bilstm", o.cfg.flags.no_bilstm},
                       {"no_pkg_features", o.cfg.flags.no_pkg_features},
                       {"no_two_phase", o.cfg.flags.no_two_phase},
                       {"train_accuracy", net::accuracy(samples, res.params, opts)},
                       {"final_loss", res.loss_curve.empty() ? 0.0 : res.loss_curve.back()}};
    run.write(kModelMeta, meta.dump(1) + "\n");
}

void cmd_predict(Run& run, std::optional<Timestamp> at) {
    const auto d = load_data(run);
    const json meta = json::parse(run.read(run.input(kModelMeta)));
    std::vector<std::string> regions;
    for (const auto& r : d.regions) regions.push_back(r.id);
    if (meta.at("regions").get<std::vector<std::string>>() != regions)
        fail(ErrorKind::invalid_input, "model was trained on a different region vocabulary");
    net::ForwardOptions opts;
    opts.air_attention_bias = meta.at("air_attention_bias").get<double>();
    opts.flags.no_attention = meta.at("no_attention").get<bool>();
    opts.flags.no_bilstm = meta.at("no_bilstm").get<bool>();
    opts.flags.no_pkg_features = meta.at("no_pkg_features").get<bool>();
    opts.flags.no_two_phase = meta.at("no_two_phase").get<bool>();
    const auto model_path = run.input(kModelFile);
    run.inputs.push_back(model_path);
    const auto params = net::load_params(model_path);
    const Timestamp when = at ? *at : last_case_time(d);
    const auto samples = region_samples(run, d, {when}, meta.at("steps").get<std::size_t>());
    std::string csv = "region,predicted,p_c1,p_c2,p_c3,p_c4,p_none,label\n";
    std::vector<std::string> hot;
    for (const auto& s : samples) {
        const auto tr = net::forward(s, params, opts);
        Eigen::Index best = 0;
        tr.probs.maxCoeff(&best);
        const auto cls = static_cast<net::HotspotClass>(best);
        csv += s.region + "," + net::to_string(cls);
        for (Eigen::Index k = 0; k < tr.probs.size(); ++k) csv += "," + format_double(tr.probs[k]);
        csv += std::string(",") + net::to_string(s.label) + "\n";
        if (net::is_hotspot(cls)) hot.push_back(s.region);
    }
    run.write("predictions.csv", csv);
    run.write("hotspots.json", json({{"at", when}, {"hotspots", hot}}).dump(1) + "\n");
    log(Level::info, "predicted " + std::to_string(hot.size()) + " hotspot regions");
}

void cmd_trace(Run& run, const std::string& user, double spatial_tol_m, Timestamp time_tol_s) {
    const auto store = load_store(run);
    io::Dataset d;
    if (io::file_exists(run.input(io::kRegionsFile))) d = load_data(run);
    const auto contacts = pkg::contact_trace(user, store, spatial_tol_m, time_tol_s, d.places);
    run.write("contacts.json", json({{"user", user}, {"contacts", contacts}}).dump(1) + "\n");
}

void cmd_fogsim(Run& run, const std::string& scenario) {
    const auto p = fog::parse_pipeline(run.read(scenario));
    const auto rows = fog::sweep(p);
    run.write("fog_sweep.csv", fog::sweep_csv(rows));
    double dmin = 1e300, dmax = -1e300, pmin = 1e300, pmax = -1e300;
    for (const auto& r : rows) {
        dmin = std::min(dmin, r.delay_reduction_pct);
        dmax = std::max(dmax, r.delay_reduction_pct);
        pmin = std::min(pmin, r.power_reduction_pct);
        pmax = std::max(pmax, r.power_reduction_pct);
    }
    run.write("fog_summary.json", json({{"rows", rows.size()},
                                        {"delay_reduction_pct", {dmin, dmax}},
                                        {"power_reduction_pct", {pmin, pmax}}})
                                      .dump(1) + "\n");
}

void cmd_health(Run& run, const std::string& profiles, const std::string& readings) {
    const auto book = health::parse_profiles_csv(run.read(profiles), profiles);
    const auto rs = health::parse_readings_csv(run.read(readings), readings);
    const auto& profile = health::select_profile(book, rs);
    run.write("alert.json", health::alert_json(health::check_status(rs, profile), profile) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mobepi: mobility knowledge graph, pattern mining and hotspot prediction toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1, 1);
    Run run;
    std::uint64_t seed = 7;

    auto common = [&](CLI::App* sub, bool needs_in) {
        sub->add_option("--seed", seed, "seed for every random choice")->capture_default_str();
        sub->add_option("--out", run.out_dir, "output directory")->required();
        if (needs_in) sub->add_option("--in", run.in_dir, "input directory (defaults to --out)");
    };

    io::ScenarioConfig scfg;
    auto* synth = app.add_subcommand("synth", "generate a scenario with planted ground truth");
    common(synth, false);
    synth->add_option("--users", scfg.background_users, "background users")->capture_default_str();
    synth->add_option("--days", scfg.days, "days of trajectories")->capture_default_str();
    synth->add_option("--weeks", scfg.weeks_of_cases, "weeks of case events")->capture_default_str();

    auto* ingest = app.add_subcommand("ingest", "validate a dataset directory and write a normalized copy");
    common(ingest, true);

    DeriveOptions dopt;
    auto* derive = app.add_subcommand("derive", "derive visit, group, flow, hotspot and route facts");
    common(derive, true);
    derive->add_option("--nu", dopt.nu, "flow user threshold")->capture_default_str();
    derive->add_option("--stay-radius", dopt.stay_radius_m, "stay radius in meters")->capture_default_str();
    derive->add_option("--stay-min", dopt.stay_min_s, "minimum stay in seconds")->capture_default_str();
    derive->add_option("--group-tol", dopt.group_tol_s, "group time tolerance in seconds")->capture_default_str();
    derive->add_option("--flow-slot", dopt.flow_slot_s, "flow slot width in seconds")->capture_default_str();

    std::string kind_text;
    double pi = 0.3;
    patterns::NeighborRelation nr;
    double span_days = 7.0;
    std::size_t max_size = 3;
    auto* mine = app.add_subcommand("mine", "mine cascading or co-occurrence patterns from the PKG");
    common(mine, true);
    mine->add_option("--kind", kind_text, "cascading | cooccurrence")
        ->required()
        ->check(CLI::IsMember({"cascading", "cooccurrence"}));
    mine->add_option("--pi", pi, "participation index threshold")->capture_default_str();
    mine->add_option("--buffer-m", nr.spatial_buffer_m, "spatial buffer in meters")->capture_default_str();
    mine->add_option("--span-days", span_days, "temporal span in days")->capture_default_str();
    mine->add_option("--max-size", max_size, "largest pattern size")->capture_default_str();

    auto* panel = app.add_subcommand("sc-panel", "weekly Moran SC per adjacency metric");
    common(panel, true);

    TrainOptions topt;
    double snapshot_days = 2.0;
    auto* train = app.add_subcommand("train", "train the hotspot classifier on region snapshots");
    common(train, true);
    train->add_flag("--no-attention", topt.cfg.flags.no_attention, "replace attention by mean pooling");
    train->add_flag("--no-bilstm", topt.cfg.flags.no_bilstm, "forward LSTM only");
    train->add_flag("--no-pkg-features", topt.cfg.flags.no_pkg_features, "zero SC and pattern features");
    train->add_flag("--no-two-phase", topt.cfg.flags.no_two_phase, "drop the air-travel attention bias");
    train->add_option("--epochs", topt.cfg.epochs, "training epochs")->capture_default_str();
    train->add_option("--hidden", topt.cfg.cell_size, "LSTM/GRU cell size")->capture_default_str();
    train->add_option("--batch", topt.cfg.batch_size, "mini-batch size")->capture_default_str();
    train->add_option("--lr", topt.cfg.step_size, "Adam step size")->capture_default_str();
    train->add_option("--snapshot-days", snapshot_days, "days between training snapshots")->capture_default_str();
    train->add_option("--steps", topt.steps, "sequence length")->capture_default_str();

    std::optional<Timestamp> at;
    auto* predict = app.add_subcommand("predict", "classify every region at a time point");
    common(predict, true);
    predict->add_option("--at", at, "prediction time (default: last case)");

    std::string user;
    double spatial_tol = 0.0;
    Timestamp time_tol = 900;
    auto* trace = app.add_subcommand("trace", "contact tracing from the PKG");
    common(trace, true);
    trace->add_option("--user", user, "infected user id")->required();
    trace->add_option("--spatial-tol", spatial_tol, "place distance tolerance in meters")->capture_default_str();
    trace->add_option("--time-tol", time_tol, "time tolerance in seconds")->capture_default_str();

    std::string fog_file;
    auto* fogsim = app.add_subcommand("fogsim", "fog vs cloud delay and power sweep");
    common(fogsim, false);
    fogsim->add_option("--scenario", fog_file, "pipeline parameter file")->required()->check(CLI::ExistingFile);

    pkg::BenchConfig bcfg;
    auto* bench = app.add_subcommand("bench-pkg", "PKG query benchmark");
    common(bench, false);
    bench->add_option("--entities", bcfg.entities, "users + places")->required();
    bench->add_option("--queries", bcfg.queries, "workload size")->capture_default_str();
    bench->add_option("--facts-per-user", bcfg.facts_per_user, "visits per user")->capture_default_str();
    bench->add_flag("--scan", bcfg.with_scan, "also time a linear scan");

    std::string profiles, readings;
    auto* health_cmd = app.add_subcommand("health", "check readings against context-selected profiles");
    common(health_cmd, false);
    health_cmd->add_option("--profiles", profiles, "profile CSV")->required()->check(CLI::ExistingFile);
    health_cmd->add_option("--readings", readings, "readings CSV")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    run.subcommand = sub->get_name();
    run.seed = seed;
    if (run.in_dir.empty()) run.in_dir = run.out_dir;
    for (const auto* opt : sub->get_options()) {
        if (opt->get_name() == "--help" || opt->count() == 0) continue;
        const auto name = opt->get_name().substr(2);
        const auto values = opt->results();
        run.params[name] = values.size() == 1 ? json(values.front()) : json(values);
    }
    try {
        if (sub == synth) {
            scfg.seed = seed;
            cmd_synth(run, scfg);
        } else if (sub == ingest) {
            cmd_ingest(run);
        } else if (sub == derive) {
            cmd_derive(run, dopt);
        } else if (sub == mine) {
            nr.temporal_span_s = static_cast<Timestamp>(span_days * 86400.0);
            cmd_mine(run, kind_text == "cascading" ? patterns::PatternKind::cascading
                                                   : patterns::PatternKind::co_occurrence,
                     pi, nr, max_size);
        } else if (sub == panel) {
            cmd_sc_panel(run);
        } else if (sub == train) {
            topt.cfg.seed = seed;
            topt.snapshot_step_s = static_cast<Timestamp>(snapshot_days * 86400.0);
            cmd_train(run, topt);
        } else if (sub == predict) {
            cmd_predict(run, at);
        } else if (sub == trace) {
            cmd_trace(run, user, spatial_tol, time_tol);
        } else if (sub == fogsim) {
            cmd_fogsim(run, fog_file);
        } else if (sub == bench) {
            bcfg.seed = seed;
            const auto r = pkg::run_query_bench(bcfg);
            run.write("bench_pkg.json", pkg::bench_json(r) + "\n");
            std::cout << pkg::bench_json(r) << "\n";
        } else if (sub == health_cmd) {
            cmd_health(run, profiles, readings);
        }
        run.manifest();
    } catch (const Error& e) {
        std::cerr << "error[" << to_string(e.kind()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
