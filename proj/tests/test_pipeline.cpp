#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coherency/errors.hpp"
#include "coherency/pipeline.hpp"
#include "helpers.hpp"

using namespace coherency;
using nlohmann::json;

namespace {

std::vector<json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<json> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(json::parse(line));
    return lines;
}

std::set<std::set<std::string>> group_set(const json& groups) {
    std::set<std::set<std::string>> out;
    for (const auto& g : groups) {
        std::set<std::string> names;
        for (const auto& id : g) names.insert(id.get<std::string>());
        out.insert(names);
    }
    return out;
}

// Two affine families, anti-correlated across: clusters exactly.
std::string write_cc_trajectory(const std::string& dir) {
    Trajectory traj;
    traj.ids = {"A1", "A2", "B1", "B2"};
    traj.dt = 0.05;
    for (std::size_t k = 0; k < 150; ++k) {
        double s = std::sin(0.1 * static_cast<double>(k));
        traj.samples.push_back(
            {0.05 * static_cast<double>(k), {s, 2.0 * s + 0.5, -s, -3.0 * s + 1.0}, {}});
    }
    auto path = dir + "/waves.csv";
    save_trajectory(traj, path);
    return path;
}

std::string minimal_scenario(const std::string& extra = "") {
    return std::string(R"({
  "machines": {
    "ids": ["G1", "G2"],
    "inertia": [0.13, 0.2],
    "damping": [0.1, 0.1],
    "mech_power": [0.5, -0.5],
    "emf": [1.0, 1.0]
  },
  "networks": {
    "base": {"g": [[0, 0], [0, 0]], "b": [[0, 5], [5, 0]]}
  },
  "config": {"t_end": 1.0, "h": 0.005, "sample_every": 2})") +
           extra + "\n}\n";
}

}  // namespace

TEST_CASE("checksums follow the 64-bit FNV-1a reference values") {
    auto dir = testutil::tmp_dir("fnv");
    auto empty = testutil::write_file(dir, "empty.bin", "");
    auto hello = testutil::write_file(dir, "hello.bin", "hello");
    CHECK(fnv1a64_file(empty) == "cbf29ce484222325");
    CHECK(fnv1a64_file(hello) == "a430d84680aabd0b");
    CHECK_THROWS_AS(fnv1a64_file(dir + "/absent.bin"), InputError);
}

TEST_CASE("the bundled scenario loads with its networks, events and horizon") {
    auto sc = load_scenario(testutil::scenario("demo4.json"));
    CHECK(sc.machines.size() == 4);
    CHECK(sc.machines.ids == std::vector<std::string>{"G1", "G2", "G3", "G4"});
    CHECK(sc.network_names.size() == 3);
    CHECK(sc.network("base").b(0, 1) == doctest::Approx(6.0));
    CHECK(sc.network("post").b(1, 2) == doctest::Approx(0.0));
    CHECK(sc.initial_network == "base");
    REQUIRE(sc.events.size() == 3);
    CHECK(sc.events[0].t == doctest::Approx(0.01));
    CHECK(std::holds_alternative<ScaleMechPower>(sc.events[0].action));
    CHECK(std::holds_alternative<SetNetwork>(sc.events[1].action));
    CHECK(sc.config.t_end == doctest::Approx(30.0));
    CHECK(sc.config.h == doctest::Approx(0.005));
    CHECK(sc.config.sample_every == 2);
    CHECK_FALSE(sc.has_init);
    CHECK_THROWS_WITH_AS(sc.network("nope"), doctest::Contains("unknown network"), InputError);
}

TEST_CASE("scenario validation rejects malformed documents") {
    auto dir = testutil::tmp_dir("scenario_errors");
    auto check_throws = [&](const std::string& name, const std::string& content,
                            const std::string& needle) {
        auto path = testutil::write_file(dir, name, content);
        CHECK_THROWS_WITH_AS(load_scenario(path), doctest::Contains(needle.c_str()),
                             InputError);
    };

    check_throws("broken.json", "{ not json", ":");
    check_throws("nonet.json",
                 R"({"machines": {"ids": ["A","B"], "inertia": [1,1], "damping": [0,0],
                     "mech_power": [0,0], "emf": [1,1]}})",
                 "missing 'networks'");

    check_throws("badinit.json", minimal_scenario(R"(, "initial_network": "ghost")"),
                 "unknown network 'ghost'");

    check_throws("unsorted.json",
                 minimal_scenario(R"(, "events": [
                   {"t": 0.5, "action": {"scale_mech_power": 2.0}},
                   {"t": 0.2, "action": {"scale_mech_power": 0.5}}])"),
                 "sorted by time");

    check_throws("twokeys.json",
                 minimal_scenario(R"(, "events": [
                   {"t": 0.5, "action": {"scale_mech_power": 2.0, "set_network": "base"}}])"),
                 "exactly one key");

    check_throws("unknownact.json",
                 minimal_scenario(R"(, "events": [{"t": 0.5, "action": {"explode": true}}])"),
                 "unknown event action");

    check_throws("badpower.json",
                 minimal_scenario(R"(, "events": [
                   {"t": 0.5, "action": {"set_mech_power": [1.0]}}])"),
                 "set_mech_power length");

    check_throws("badinitlen.json", minimal_scenario(R"(, "init": {"delta": [0.0]})"),
                 "init delta length");

    check_throws("badmachine.json",
                 R"({"machines": {"ids": ["A","B"], "inertia": [-1,1], "damping": [0,0],
                     "mech_power": [0,0], "emf": [1,1]},
                     "networks": {"base": {"g": [[0,0],[0,0]], "b": [[0,1],[1,0]]}}})",
                 "inertia");

    check_throws("badh.json",
                 R"({"machines": {"ids": ["A","B"], "inertia": [1,1], "damping": [0,0],
                     "mech_power": [0,0], "emf": [1,1]},
                     "networks": {"base": {"g": [[0,0],[0,0]], "b": [[0,1],[1,0]]}},
                     "config": {"h": 0.5}})",
                 "step size h");

    // Valid init is honored instead of the equilibrium default.
    auto ok = testutil::write_file(dir, "withinit.json",
                                   minimal_scenario(R"(, "init": {"delta": [0.1, -0.1],
                                                                  "speed": [0.0, 0.0]})"));
    auto sc = load_scenario(ok);
    CHECK(sc.has_init);
    CHECK(sc.init.delta == std::vector<double>{0.1, -0.1});
}

TEST_CASE("simulate writes the trajectory, segment manifest and checksummed manifest") {
    auto dir = testutil::tmp_dir("sim_demo");
    auto warnings = cmd_simulate(testutil::scenario("demo4.json"), dir);
    CHECK(warnings.empty());

    auto traj = load_trajectory(dir + "/trajectory.csv");
    CHECK(traj.n_samples() == 3001);
    CHECK(traj.dt == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(traj.ids == std::vector<std::string>{"G1", "G2", "G3", "G4"});
    REQUIRE_FALSE(traj.samples.front().speed.empty());  // speed sibling picked up

    auto seg = json::parse(testutil::read_file(dir + "/segments.json"));
    REQUIRE(seg["segments"].size() == 3);
    CHECK(seg["segments"][0]["network"] == "base");
    CHECK(seg["segments"][1]["network"] == "fault");
    CHECK(seg["segments"][2]["network"] == "post");
    CHECK(seg["segments"][0]["t_start"].get<double>() == doctest::Approx(0.0));
    CHECK(seg["segments"][0]["t_end"].get<double>() == doctest::Approx(3.0));
    CHECK(seg["segments"][1]["t_end"].get<double>() == doctest::Approx(3.2));
    CHECK(seg["segments"][2]["t_end"].get<double>() == doctest::Approx(30.0));
    CHECK(seg["machines"]["ids"].size() == 4);
    CHECK(seg["networks"].contains("base"));
    CHECK(seg["networks"].contains("fault"));
    CHECK(seg["networks"].contains("post"));

    auto manifest = json::parse(testutil::read_file(dir + "/manifest.json"));
    CHECK(manifest["tool_version"] == kToolVersion);
    CHECK(manifest["config"]["t_end"].get<double>() == doctest::Approx(30.0));
    CHECK(manifest["wall_clock_seconds"].contains("simulate"));
    std::set<std::string> outs;
    for (const auto& o : manifest["outputs"]) {
        std::string path = o["path"].get<std::string>();
        outs.insert(path);
        CHECK(o["fnv1a64"].get<std::string>() == fnv1a64_file(dir + "/" + path));
    }
    CHECK(outs == std::set<std::string>{"trajectory.csv", "trajectory.speed.csv",
                                        "segments.json"});
}

TEST_CASE("repeated simulations produce byte-identical data files") {
    auto dir1 = testutil::tmp_dir("sim_rep1");
    auto dir2 = testutil::tmp_dir("sim_rep2");
    cmd_simulate(testutil::scenario("demo4.json"), dir1);
    cmd_simulate(testutil::scenario("demo4.json"), dir2);
    CHECK(testutil::read_file(dir1 + "/trajectory.csv") ==
          testutil::read_file(dir2 + "/trajectory.csv"));
    CHECK(testutil::read_file(dir1 + "/trajectory.speed.csv") ==
          testutil::read_file(dir2 + "/trajectory.speed.csv"));
    CHECK(testutil::read_file(dir1 + "/segments.json") ==
          testutil::read_file(dir2 + "/segments.json"));
    // Only the wall clock may differ between the manifests.
    auto m1 = json::parse(testutil::read_file(dir1 + "/manifest.json"));
    auto m2 = json::parse(testutil::read_file(dir2 + "/manifest.json"));
    m1.erase("wall_clock_seconds");
    m2.erase("wall_clock_seconds");
    CHECK(m1 == m2);
}

TEST_CASE("analysis over the simulated demo keeps the two blocs separate") {
    auto sim_dir = testutil::tmp_dir("demo_sim_for_analysis");
    cmd_simulate(testutil::scenario("demo4.json"), sim_dir);
    auto out = testutil::tmp_dir("demo_analysis");
    AnalyzeOptions opts;
    cmd_analyze(sim_dir + "/trajectory.csv", sim_dir + "/segments.json", out, opts);

    auto rows = load_indices_series(out + "/indices.csv");
    REQUIRE(rows.size() == 3001);
    CHECK(rows.front().t == doctest::Approx(0.0));
    CHECK(rows.back().t == doctest::Approx(30.0));
    auto parts = read_jsonl(out + "/partitions.jsonl");
    REQUIRE(parts.size() == 3001);
    std::set<std::set<std::string>> expect = {{"G1", "G2"}, {"G3", "G4"}};
    for (const auto& p : parts) CHECK(group_set(p["groups"]) == expect);
    for (const auto& r : rows) {
        CHECK(r.n_groups == 2);
        CHECK(std::isfinite(r.si));
        CHECK(r.gci > r.gsi);
    }

    auto manifest = json::parse(testutil::read_file(out + "/manifest.json"));
    CHECK(manifest["config"]["method"] == "ks");
    CHECK(manifest["inputs"].contains("network"));
}

TEST_CASE("stride subsamples and jobs leave the output bytes unchanged") {
    auto sim_dir = testutil::tmp_dir("demo_sim_for_stride");
    cmd_simulate(testutil::scenario("demo4.json"), sim_dir);

    auto strided = testutil::tmp_dir("demo_strided");
    AnalyzeOptions opts;
    opts.stride = 10;
    cmd_analyze(sim_dir + "/trajectory.csv", sim_dir + "/segments.json", strided, opts);
    CHECK(load_indices_series(strided + "/indices.csv").size() == 301);

    auto jobs1 = testutil::tmp_dir("demo_jobs1");
    auto jobs4 = testutil::tmp_dir("demo_jobs4");
    AnalyzeOptions o1;
    o1.stride = 5;
    AnalyzeOptions o4 = o1;
    o4.jobs = 4;
    cmd_analyze(sim_dir + "/trajectory.csv", sim_dir + "/segments.json", jobs1, o1);
    cmd_analyze(sim_dir + "/trajectory.csv", sim_dir + "/segments.json", jobs4, o4);
    CHECK(testutil::read_file(jobs1 + "/indices.csv") ==
          testutil::read_file(jobs4 + "/indices.csv"));
    CHECK(testutil::read_file(jobs1 + "/partitions.jsonl") ==
          testutil::read_file(jobs4 + "/partitions.jsonl"));
}

TEST_CASE("a plain network file serves as the manifest for one segment") {
    auto dir = testutil::tmp_dir("plain_net");
    auto machines = testutil::two_machines();
    auto net = testutil::two_machine_net(5.0);
    save_network(machines, net, dir + "/network.json");

    Trajectory traj;
    traj.ids = machines.ids;
    traj.dt = 0.01;
    double d = std::asin(0.1);
    for (std::size_t k = 0; k < 5; ++k)
        traj.samples.push_back({0.01 * static_cast<double>(k), {d, 0.0}, {}});
    save_trajectory(traj, dir + "/flat.csv");

    auto out = testutil::tmp_dir("plain_net_out");
    cmd_analyze(dir + "/flat.csv", dir + "/network.json", out, AnalyzeOptions{});
    auto rows = load_indices_series(out + "/indices.csv");
    REQUIRE(rows.size() == 5);
    for (const auto& r : rows) {
        CHECK(r.n_groups == 1);
        CHECK(std::isinf(r.si));
        CHECK(r.gci == doctest::Approx(rows[0].gci));
    }

    // Mismatched ids between manifest and trajectory are rejected.
    Trajectory other = traj;
    other.ids = {"X1", "X2"};
    save_trajectory(other, dir + "/other.csv");
    CHECK_THROWS_WITH_AS(
        cmd_analyze(dir + "/other.csv", dir + "/network.json", out, AnalyzeOptions{}),
        doctest::Contains("generator ids differ"), InputError);
}

TEST_CASE("correlation analysis clusters affine families without a network") {
    auto dir = testutil::tmp_dir("cc_analysis");
    auto traj_path = write_cc_trajectory(dir);
    auto out = testutil::tmp_dir("cc_analysis_out");
    AnalyzeOptions opts;
    opts.method = "cc";
    cmd_analyze(traj_path, "", out, opts);

    auto rows = load_indices_series(out + "/indices.csv");
    REQUIRE(rows.size() == 51);  // samples 99..149 have a full trailing window
    CHECK(rows.front().t == doctest::Approx(0.05 * 99).epsilon(1e-9));
    auto parts = read_jsonl(out + "/partitions.jsonl");
    REQUIRE(parts.size() == 51);
    std::set<std::set<std::string>> expect = {{"A1", "A2"}, {"B1", "B2"}};
    for (const auto& p : parts) CHECK(group_set(p["groups"]) == expect);
    for (const auto& r : rows) {
        CHECK(r.gci == doctest::Approx(1.0).epsilon(1e-9));   // perfect within-family corr
        CHECK(r.gsi == doctest::Approx(-1.0).epsilon(1e-9));  // perfect anti-corr across
    }

    auto jobs4 = testutil::tmp_dir("cc_analysis_jobs4");
    opts.jobs = 4;
    cmd_analyze(traj_path, "", jobs4, opts);
    CHECK(testutil::read_file(out + "/indices.csv") ==
          testutil::read_file(jobs4 + "/indices.csv"));
}

TEST_CASE("matrix dumps are written when requested") {
    auto dir = testutil::tmp_dir("cc_dump");
    auto traj_path = write_cc_trajectory(dir);
    auto out = testutil::tmp_dir("cc_dump_out");
    AnalyzeOptions opts;
    opts.method = "cc";
    opts.stride = 10;
    opts.dump_matrices = true;
    cmd_analyze(traj_path, "", out, opts);
    // Picks are multiples of the stride with a full window: 100..140.
    auto [m, labels] = load_matrix(out + "/matrices/cc_000000.csv");
    CHECK(labels == std::vector<std::string>{"A1", "A2", "B1", "B2"});
    CHECK(m(0, 0) == doctest::Approx(1.0));
    CHECK(m(0, 1) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m(0, 2) == doctest::Approx(-1.0).epsilon(1e-9));
    auto manifest = json::parse(testutil::read_file(out + "/manifest.json"));
    std::size_t dumped = 0;
    for (const auto& o : manifest["outputs"])
        if (o["path"].get<std::string>().rfind("matrices/", 0) == 0) ++dumped;
    CHECK(dumped == 5);
}

TEST_CASE("single-matrix analysis reproduces the fixture indices") {
    auto out = testutil::tmp_dir("matrix_bypass");
    cmd_analyze_matrix(testutil::fixture("ks19.csv"), out);
    auto rows = load_indices_series(out + "/indices.csv");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].t == 0.0);
    CHECK(rows[0].n_groups == 4);
    CHECK(std::abs(rows[0].gci - 8.306167) <= 1e-4);
    CHECK(std::abs(rows[0].gsi - 0.6215) <= 1e-5);
    CHECK(std::abs(rows[0].si - 13.364709) <= 1e-3);
    auto parts = read_jsonl(out + "/partitions.jsonl");
    REQUIRE(parts.size() == 1);
    CHECK(group_set(parts[0]["groups"]).count({"G8", "G9", "G10"}) == 1);
}

TEST_CASE("cluster command emits named groups with the peak modularity") {
    auto out = testutil::tmp_dir("cluster_cmd");
    cmd_cluster(testutil::fixture("ks19.csv"), out + "/groups.json");
    auto j = json::parse(testutil::read_file(out + "/groups.json"));
    REQUIRE(j["groups"].size() == 4);
    CHECK(j["Q"].get<double>() == doctest::Approx(0.531837317161847).epsilon(1e-12));
    std::set<std::set<std::string>> expect = {
        {"G14", "G15", "G16", "G17", "G18", "G19"},
        {"G1", "G2", "G3", "G4", "G5"},
        {"G6", "G7", "G11", "G12", "G13"},
        {"G8", "G9", "G10"},
    };
    CHECK(group_set(j["groups"]) == expect);

    cmd_cluster(testutil::fixture("cc18.csv"), out + "/cc_groups.json");
    auto jc = json::parse(testutil::read_file(out + "/cc_groups.json"));
    CHECK(jc["groups"].size() == 2);
    CHECK(jc["Q"].get<double>() == doctest::Approx(0.306013487526546).epsilon(1e-12));
}

TEST_CASE("the cc command writes a labeled correlation matrix") {
    auto dir = testutil::tmp_dir("cc_cmd");
    auto traj_path = write_cc_trajectory(dir);
    cmd_cc(traj_path, 7.45, 100, dir + "/cc.csv");
    auto [m, labels] = load_matrix(dir + "/cc.csv");
    CHECK(labels == std::vector<std::string>{"A1", "A2", "B1", "B2"});
    CHECK(m.dim() == 4);
    CHECK(m(1, 1) == doctest::Approx(1.0));
    CHECK(m(0, 1) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m(2, 3) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m(0, 3) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("analyze rejects unusable options and inputs") {
    auto dir = testutil::tmp_dir("analyze_errors");
    auto traj_path = write_cc_trajectory(dir);
    auto out = dir + "/out";

    AnalyzeOptions bad;
    bad.method = "magic";
    CHECK_THROWS_WITH_AS(cmd_analyze(traj_path, "", out, bad),
                         doctest::Contains("unknown method"), InputError);
    bad = AnalyzeOptions{};
    bad.stride = 0;
    CHECK_THROWS_AS(cmd_analyze(traj_path, "", out, bad), InputError);
    bad = AnalyzeOptions{};
    bad.jobs = 0;
    CHECK_THROWS_AS(cmd_analyze(traj_path, "", out, bad), InputError);

    CHECK_THROWS_WITH_AS(cmd_analyze(traj_path, "", out, AnalyzeOptions{}),
                         doctest::Contains("needs a network manifest"), InputError);

    AnalyzeOptions cc;
    cc.method = "cc";
    cc.cc_window = 151;
    CHECK_THROWS_WITH_AS(cmd_analyze(traj_path, "", out, cc),
                         doctest::Contains("fewer than the correlation window"), InputError);
}
