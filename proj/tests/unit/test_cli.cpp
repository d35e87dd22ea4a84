#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <set>
#include <sys/wait.h>

#include <json.hpp>

#include "mobepi/dataio.hpp"

using namespace mobepi;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string output;
};

Run cli(const std::string& args) {
    const std::string cmd = std::string(MOBEPI_CLI_PATH) + " " + args + " 2>&1";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string fresh(const std::string& name) {
    const auto dir = fs::path(MOBEPI_TEST_TMP) / "cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::string& dir, const std::string& name) { return io::read_file((fs::path(dir) / name).string()); }

}  // namespace

TEST_CASE("synth is byte-identical per seed") {
    const auto a = fresh("synth_a"), b = fresh("synth_b");
    REQUIRE(cli("synth --seed 3 --out " + a).code == 0);
    REQUIRE(cli("synth --seed 3 --out " + b).code == 0);
    for (const auto& e : fs::directory_iterator(a)) {
        const auto name = e.path().filename().string();
        if (name.rfind("manifest.", 0) == 0) continue;  // records the output path
        CHECK_MESSAGE(slurp(a, name) == slurp(b, name), name);
    }
    const auto m = nlohmann::json::parse(slurp(a, "manifest.synth.json"));
    CHECK(m["subcommand"] == "synth");
    CHECK(m["seed"] == 3);
    CHECK(m["outputs"].size() >= 7);
}

TEST_CASE("mine on an empty PKG writes an empty file") {
    const auto dir = fresh("empty_pkg");
    io::save_pkg(pkg::PkgStore{}, (fs::path(dir) / "pkg.txt").string());
    const auto r = cli("mine --kind cascading --out " + dir);
    CHECK_MESSAGE(r.code == 0, r.output);
    CHECK(slurp(dir, "patterns_cascading.jsonl").empty());
}

TEST_CASE("usage and module errors have distinct exit codes") {
    const auto dir = fresh("errors");
    CHECK(cli("synth --out " + dir + " --warp 9").code == 2);
    CHECK(cli("").code == 2);
    CHECK(cli("mine --kind sideways --out " + dir).code == 2);
    const auto r = cli("derive --out " + dir);  // no dataset there
    CHECK(r.code == 1);
    CHECK(r.output.find("error[") != std::string::npos);
    CHECK(cli("trace --user nobody --out " + dir).code == 1);
}

TEST_CASE("health and fogsim subcommands") {
    const auto dir = fresh("misc");
    io::write_file(dir + "/profiles.csv", "bucket,parameter,low,up\ndefault,spo2,94,100\n");
    io::write_file(dir + "/readings.csv", "parameter,value,timestamp\nspo2,91,5\n");
    REQUIRE(cli("health --profiles " + dir + "/profiles.csv --readings " + dir + "/readings.csv --out " + dir).code == 0);
    CHECK(nlohmann::json::parse(slurp(dir, "alert.json"))["status"] == "Abnormal");
    REQUIRE(cli("fogsim --scenario " + std::string(MOBEPI_SOURCE_DIR) + "/data/fog_reference.conf --out " + dir).code == 0);
    CHECK(slurp(dir, "fog_sweep.csv") == io::read_file(std::string(MOBEPI_SOURCE_DIR) + "/tests/golden/fog_sweep.csv"));
}

TEST_CASE("full pipeline recovers the planted hotspots") {
    const auto dir = fresh("pipeline");
    for (const std::string step : {"synth", "derive", "mine --kind cascading", "mine --kind cooccurrence", "sc-panel",
                                   "train", "predict"}) {
        const auto r = cli(step + " --out " + dir);
        REQUIRE_MESSAGE(r.code == 0, step << ": " << r.output);
    }
    const auto truth = nlohmann::json::parse(slurp(dir, "truth.json"));
    std::set<std::string> planted;
    for (const auto& k : {"c1_regions", "c2_regions"})
        for (const auto& id : truth[k]) planted.insert(id.get<std::string>());
    REQUIRE_FALSE(planted.empty());
    const auto hot = nlohmann::json::parse(slurp(dir, "hotspots.json"));
    std::set<std::string> predicted;
    for (const auto& id : hot["hotspots"]) predicted.insert(id.get<std::string>());
    for (const auto& id : planted) CHECK_MESSAGE(predicted.count(id) == 1, id);

    const auto group = truth["group"]["users"];
    REQUIRE(group.size() >= 2);
    const auto first = group[0].get<std::string>();
    const auto trace = cli("trace --user " + first + " --out " + dir);
    CHECK(trace.code == 0);
    const auto contacts = nlohmann::json::parse(slurp(dir, "contacts.json"));
    std::set<std::string> traced;
    for (const auto& u : contacts["contacts"]) traced.insert(u.get<std::string>());
    for (const auto& u : group)
        if (u != first) CHECK(traced.count(u.get<std::string>()) == 1);
}
