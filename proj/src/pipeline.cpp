#include "coherency/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coherency/clustering.hpp"
#include "coherency/coherency.hpp"
#include "coherency/errors.hpp"

namespace coherency {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
}

std::vector<double> json_doubles(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) throw InputError(ctx + ": missing field '" + key + "'");
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) throw InputError(ctx + ": field '" + key + "' has a non-numeric entry");
        out.push_back(v.get<double>());
    }
    return out;
}

SymmetricMatrix json_symmetric(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) throw InputError(ctx + ": missing matrix '" + key + "'");
    std::vector<std::vector<double>> rows;
    for (const auto& r : j[key]) {
        std::vector<double> row;
        for (const auto& v : r) row.push_back(v.get<double>());
        rows.push_back(std::move(row));
    }
    std::size_t n = rows.size();
    for (const auto& r : rows)
        if (r.size() != n) throw InputError(ctx + ": matrix '" + key + "' is not square");
    SymmetricMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k <= i; ++k) {
            if (std::abs(rows[i][k] - rows[k][i]) > 1e-6)
                throw InputError(ctx + ": matrix '" + key + "' is asymmetric");
            m.set(i, k, (rows[i][k] + rows[k][i]) / 2.0);
        }
    return m;
}

MachineSet machines_from_json(const json& j, const std::string& ctx) {
    MachineSet machines;
    if (!j.contains("ids")) throw InputError(ctx + ": missing 'ids'");
    for (const auto& id : j["ids"]) machines.ids.push_back(id.get<std::string>());
    machines.inertia = json_doubles(j, "inertia", ctx);
    machines.damping = json_doubles(j, "damping", ctx);
    machines.mech_power = json_doubles(j, "mech_power", ctx);
    machines.emf = json_doubles(j, "emf", ctx);
    machines.validate();
    return machines;
}

json machines_to_json(const MachineSet& machines) {
    json j;
    j["ids"] = machines.ids;
    j["inertia"] = machines.inertia;
    j["damping"] = machines.damping;
    j["mech_power"] = machines.mech_power;
    j["emf"] = machines.emf;
    return j;
}

json matrix_to_json(const SymmetricMatrix& m) {
    std::size_t n = m.dim();
    std::vector<std::vector<double>> rows(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j2 = 0; j2 < n; ++j2) rows[i][j2] = m(i, j2);
    return json(rows);
}

struct StageClock {
    std::map<std::string, double> seconds;
    std::chrono::steady_clock::time_point mark = std::chrono::steady_clock::now();

    void lap(const std::string& stage) {
        auto now = std::chrono::steady_clock::now();
        seconds[stage] = std::chrono::duration<double>(now - mark).count();
        mark = now;
    }
};

void write_manifest(const std::string& out_dir, const json& inputs, const json& config,
                    const StageClock& clock, const std::vector<std::string>& outputs) {
    json j;
    j["tool_version"] = kToolVersion;
    j["inputs"] = inputs;
    j["config"] = config;
    j["wall_clock_seconds"] = clock.seconds;
    j["outputs"] = json::array();
    for (const auto& name : outputs) {
        json entry;
        entry["path"] = name;
        entry["fnv1a64"] = fnv1a64_file((fs::path(out_dir) / name).string());
        j["outputs"].push_back(entry);
    }
    std::ofstream out(fs::path(out_dir) / "manifest.json");
    if (!out) throw InputError("cannot write manifest in " + out_dir);
    out << j.dump(2) << "\n";
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create directory " + dir + ": " + ec.message());
}

json groups_json(const Partition& p, const std::vector<std::string>& ids) {
    json groups = json::array();
    for (const auto& group : p.groups()) {
        json g = json::array();
        for (std::size_t i : group) g.push_back(ids[i]);
        groups.push_back(g);
    }
    return groups;
}

void write_partitions_jsonl(const std::string& path,
                            const std::vector<SnapshotAnalysis>& rows,
                            const std::vector<std::string>& ids) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write file: " + path);
    for (const auto& row : rows) {
        json line;
        line["t"] = row.indices.t;
        line["groups"] = groups_json(row.partition, ids);
        out << line.dump() << "\n";
    }
}

std::vector<IndicesRow> to_indices_rows(const std::vector<SnapshotAnalysis>& rows) {
    std::vector<IndicesRow> out;
    out.reserve(rows.size());
    for (const auto& r : rows)
        out.push_back({r.indices.t, r.indices.gci, r.indices.gsi, r.indices.si,
                       r.partition.n_groups});
    return out;
}

}  // namespace

const ReducedNetwork& Scenario::network(const std::string& name) const {
    for (std::size_t k = 0; k < network_names.size(); ++k)
        if (network_names[k] == name) return networks[k];
    throw InputError("scenario references unknown network '" + name + "'");
}

Scenario load_scenario(const std::string& path) {
    json j = parse_json_file(path);
    Scenario sc;
    if (!j.contains("machines")) throw InputError(path + ": missing 'machines'");
    sc.machines = machines_from_json(j["machines"], path);
    std::size_t n = sc.machines.size();

    if (!j.contains("networks") || !j["networks"].is_object() || j["networks"].empty())
        throw InputError(path + ": missing 'networks' map");
    for (const auto& [name, netj] : j["networks"].items()) {
        ReducedNetwork net;
        net.g = json_symmetric(netj, "g", path + " network '" + name + "'");
        net.b = json_symmetric(netj, "b", path + " network '" + name + "'");
        if (net.g.dim() != n || net.b.dim() != n)
            throw InputError(path + ": network '" + name + "' dimension differs from machines");
        sc.network_names.push_back(name);
        sc.networks.push_back(std::move(net));
    }

    sc.initial_network = j.value("initial_network", std::string("base"));
    sc.network(sc.initial_network);  // validates existence before anything runs

    if (j.contains("config")) {
        const auto& c = j["config"];
        sc.config.t_end = c.value("t_end", sc.config.t_end);
        sc.config.h = c.value("h", sc.config.h);
        if (c.contains("sample_every")) sc.config.sample_every = c["sample_every"].get<std::size_t>();
        sc.config.omega_s = c.value("omega_s", sc.config.omega_s);
    }
    sc.config.validate();

    if (j.contains("events")) {
        for (const auto& evj : j["events"]) {
            if (!evj.contains("t") || !evj.contains("action"))
                throw InputError(path + ": every event needs 't' and 'action'");
            const auto& action = evj["action"];
            if (!action.is_object() || action.size() != 1)
                throw InputError(path + ": event action must have exactly one key");
            Event ev;
            ev.t = evj["t"].get<double>();
            if (action.contains("set_network")) {
                std::string name = action["set_network"].get<std::string>();
                ev.action = SetNetwork{sc.network(name), name};
            } else if (action.contains("scale_mech_power")) {
                ev.action = ScaleMechPower{action["scale_mech_power"].get<double>()};
            } else if (action.contains("set_mech_power")) {
                auto power = action["set_mech_power"].get<std::vector<double>>();
                if (power.size() != n)
                    throw InputError(path + ": set_mech_power length differs from machines");
                ev.action = SetMechPower{std::move(power)};
            } else {
                throw InputError(path + ": unknown event action '" +
                                 action.items().begin().key() + "'");
            }
            sc.events.push_back(std::move(ev));
        }
    }
    for (std::size_t k = 1; k < sc.events.size(); ++k)
        if (sc.events[k].t < sc.events[k - 1].t)
            throw InputError(path + ": events must be sorted by time");

    if (j.contains("init")) {
        sc.has_init = true;
        sc.init.t = 0.0;
        sc.init.delta = json_doubles(j["init"], "delta", path + " init");
        if (sc.init.delta.size() != n)
            throw InputError(path + ": init delta length differs from machines");
        if (j["init"].contains("speed")) {
            sc.init.speed = json_doubles(j["init"], "speed", path + " init");
            if (sc.init.speed.size() != n)
                throw InputError(path + ": init speed length differs from machines");
        }
    }
    return sc;
}

std::string fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file for checksum: " + path);
    std::uint64_t hash = 14695981039346656037ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        std::streamsize got = in.gcount();
        for (std::streamsize k = 0; k < got; ++k) {
            hash ^= static_cast<unsigned char>(buf[k]);
            hash *= 1099511628211ULL;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
    return hex;
}

std::vector<std::string> cmd_simulate(const std::string& scenario_path,
                                      const std::string& out_dir) {
    StageClock clock;
    Scenario sc = load_scenario(scenario_path);
    const ReducedNetwork& net0 = sc.network(sc.initial_network);
    RotorSnapshot init;
    if (sc.has_init) {
        init = sc.init;
    } else {
        init = find_equilibrium(sc.machines, net0,
                                std::vector<double>(sc.machines.size(), 0.0));
    }
    clock.lap("load");

    SimResult result = simulate(sc.machines, net0, sc.events, sc.config, init,
                                sc.initial_network);
    clock.lap("simulate");

    ensure_dir(out_dir);
    fs::path dir(out_dir);
    save_trajectory(result.trajectory, (dir / "trajectory.csv").string());

    json seg;
    seg["machines"] = machines_to_json(sc.machines);
    seg["networks"] = json::object();
    for (std::size_t k = 0; k < sc.network_names.size(); ++k) {
        json netj;
        netj["g"] = matrix_to_json(sc.networks[k].g);
        netj["b"] = matrix_to_json(sc.networks[k].b);
        seg["networks"][sc.network_names[k]] = netj;
    }
    seg["segments"] = json::array();
    for (std::size_t k = 0; k < result.segments.size(); ++k) {
        json s;
        s["t_start"] = result.segments[k].t_start;
        s["t_end"] = result.segments[k].t_end;
        s["network"] = result.segment_names[k];
        seg["segments"].push_back(s);
    }
    {
        std::ofstream out(dir / "segments.json");
        if (!out) throw InputError("cannot write file: " + (dir / "segments.json").string());
        out << seg.dump(2) << "\n";
    }
    clock.lap("write");

    json inputs;
    inputs["scenario"] = scenario_path;
    json config;
    config["t_end"] = sc.config.t_end;
    config["h"] = sc.config.h;
    config["sample_every"] = sc.config.sample_every;
    config["omega_s"] = sc.config.omega_s;
    std::vector<std::string> outputs = {"trajectory.csv", "segments.json"};
    if (fs::exists(dir / "trajectory.speed.csv")) outputs.insert(outputs.begin() + 1, "trajectory.speed.csv");
    write_manifest(out_dir, inputs, config, clock, outputs);
    return result.warnings;
}

namespace {

// Either a simulate segment manifest or a plain network JSON.
std::pair<MachineSet, std::vector<std::pair<std::string, NetworkSegment>>> load_network_manifest(
    const std::string& path, const Trajectory& traj) {
    json j = parse_json_file(path);
    MachineSet machines;
    std::vector<std::pair<std::string, NetworkSegment>> segments;
    double t0 = traj.samples.front().t;
    double t1 = traj.samples.back().t;
    if (j.contains("segments")) {
        machines = machines_from_json(j["machines"], path);
        std::map<std::string, ReducedNetwork> nets;
        for (const auto& [name, netj] : j["networks"].items()) {
            ReducedNetwork net;
            net.g = json_symmetric(netj, "g", path + " network '" + name + "'");
            net.b = json_symmetric(netj, "b", path + " network '" + name + "'");
            nets[name] = std::move(net);
        }
        for (const auto& s : j["segments"]) {
            std::string name = s["network"].get<std::string>();
            auto it = nets.find(name);
            if (it == nets.end())
                throw InputError(path + ": segment references unknown network '" + name + "'");
            segments.push_back({name, {s["t_start"].get<double>(), s["t_end"].get<double>(),
                                       it->second}});
        }
        if (segments.empty()) throw InputError(path + ": empty segment list");
    } else {
        auto [m, net] = load_network(path);
        machines = std::move(m);
        segments.push_back({"network", {t0, t1, std::move(net)}});
    }
    if (machines.ids != traj.ids)
        throw InputError(path + ": generator ids differ from trajectory header");
    return {std::move(machines), std::move(segments)};
}

Trajectory strided(const Trajectory& traj, std::size_t stride, std::size_t first = 0) {
    Trajectory out;
    out.ids = traj.ids;
    for (std::size_t k = first; k < traj.samples.size(); k += stride)
        out.samples.push_back(traj.samples[k]);
    out.dt = out.samples.size() > 1 ? out.samples[1].t - out.samples[0].t : 0.0;
    return out;
}

std::string matrix_dump_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06zu.csv", index);
    return buf;
}

}  // namespace

void cmd_analyze(const std::string& traj_path, const std::string& network_manifest,
                 const std::string& out_dir, const AnalyzeOptions& opts) {
    if (opts.method != "ks" && opts.method != "cc")
        throw InputError("unknown method '" + opts.method + "', expected ks or cc");
    if (opts.stride < 1) throw InputError("stride must be at least 1");
    if (opts.jobs < 1) throw InputError("jobs must be at least 1");
    StageClock clock;
    Trajectory traj = load_trajectory(traj_path);
    ensure_dir(out_dir);
    fs::path dir(out_dir);

    std::vector<SnapshotAnalysis> rows;
    std::vector<std::string> outputs = {"indices.csv", "partitions.jsonl"};
    if (opts.method == "ks") {
        if (network_manifest.empty())
            throw InputError("method ks needs a network manifest for the susceptances");
        auto [machines, named_segments] = load_network_manifest(network_manifest, traj);
        std::vector<NetworkSegment> segments;
        for (auto& [name, seg] : named_segments) segments.push_back(std::move(seg));
        Trajectory sub = strided(traj, opts.stride);
        clock.lap("load");
        rows = indices_series(sub, machines, segments, opts.jobs);
        clock.lap("analyze");
        if (opts.dump_matrices) {
            ensure_dir((dir / "matrices").string());
            for (std::size_t k = 0; k < sub.samples.size(); ++k) {
                auto ks = ks_matrix(sub.samples[k], machines, segment_for(segments, sub.samples[k].t));
                std::string name = std::string("matrices/ks_") + matrix_dump_name(k);
                save_matrix(ks.m, traj.ids, (dir / name).string());
                outputs.push_back(name);
            }
        }
    } else {
        if (traj.n_samples() < opts.cc_window)
            throw InputError("trajectory has " + std::to_string(traj.n_samples()) +
                             " samples, fewer than the correlation window " +
                             std::to_string(opts.cc_window));
        clock.lap("load");
        // Analyzed snapshots: every stride-th sample with a full trailing window.
        std::vector<std::size_t> picks;
        for (std::size_t k = 0; k < traj.samples.size(); k += opts.stride)
            if (k + 1 >= opts.cc_window) picks.push_back(k);
        rows.resize(picks.size());
        std::vector<CcMatrix> mats(opts.dump_matrices ? picks.size() : 0);
        std::exception_ptr failure = nullptr;
#ifdef COHERENCY_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 4) num_threads(opts.jobs)
#endif
        for (std::size_t k = 0; k < picks.size(); ++k) {
            try {
                auto cc = cc_matrix(traj, traj.samples[picks[k]].t, opts.cc_window);
                auto graph = preprocess(cc);
                auto [part, trace] = cluster(graph);
                // Indices read from the correlation matrix itself: mean
                // within-group vs cross-group correlation.
                KsMatrix as_ks{cc.t_end, cc.m};
                auto kg = ksgm(as_ks, part);
                SnapshotAnalysis row;
                row.indices.t = cc.t_end;
                row.indices.gci = gci(kg);
                if (kg.n_groups() >= 2) {
                    row.indices.gsi = gsi(kg);
                    row.indices.si = si(row.indices.gci, row.indices.gsi);
                } else {
                    row.indices.gsi = 0.0;
                    row.indices.si = std::numeric_limits<double>::infinity();
                }
                row.partition = std::move(part);
                if (opts.dump_matrices) mats[k] = std::move(cc);
                rows[k] = std::move(row);
            } catch (...) {
#ifdef COHERENCY_HAVE_OPENMP
#pragma omp critical
#endif
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
        clock.lap("analyze");
        if (opts.dump_matrices) {
            ensure_dir((dir / "matrices").string());
            for (std::size_t k = 0; k < mats.size(); ++k) {
                std::string name = std::string("matrices/cc_") + matrix_dump_name(k);
                save_matrix(mats[k].m, traj.ids, (dir / name).string());
                outputs.push_back(name);
            }
        }
    }

    save_indices_series(to_indices_rows(rows), (dir / "indices.csv").string());
    write_partitions_jsonl((dir / "partitions.jsonl").string(), rows, traj.ids);
    clock.lap("write");

    json inputs;
    inputs["trajectory"] = traj_path;
    if (!network_manifest.empty()) inputs["network"] = network_manifest;
    json config;
    config["method"] = opts.method;
    config["cc_window"] = opts.cc_window;
    config["stride"] = opts.stride;
    config["jobs"] = opts.jobs;
    write_manifest(out_dir, inputs, config, clock, outputs);
}

void cmd_analyze_matrix(const std::string& matrix_path, const std::string& out_dir) {
    StageClock clock;
    auto [m, labels] = load_matrix(matrix_path);
    clock.lap("load");
    KsMatrix ks{0.0, m};
    for (std::size_t i = 0; i < m.dim(); ++i) ks.m.set(i, i, 0.0);
    auto row = analyze_ks_snapshot(ks);
    clock.lap("analyze");
    ensure_dir(out_dir);
    fs::path dir(out_dir);
    save_indices_series(to_indices_rows({row}), (dir / "indices.csv").string());
    write_partitions_jsonl((dir / "partitions.jsonl").string(), {row}, labels);
    clock.lap("write");
    json inputs;
    inputs["matrix"] = matrix_path;
    json config;
    config["method"] = "ks";
    config["bypass"] = true;
    write_manifest(out_dir, inputs, config, clock, {"indices.csv", "partitions.jsonl"});
}

void cmd_cluster(const std::string& matrix_path, const std::string& out_path) {
    auto [m, labels] = load_matrix(matrix_path);
    auto graph = preprocess(m);
    auto [part, trace] = cluster(graph);
    json j;
    j["groups"] = groups_json(part, labels);
    j["Q"] = trace.best_q;
    std::ofstream out(out_path);
    if (!out) throw InputError("cannot write file: " + out_path);
    out << j.dump(2) << "\n";
}

void cmd_cc(const std::string& traj_path, double t_end, std::size_t window,
            const std::string& out_path) {
    Trajectory traj = load_trajectory(traj_path);
    auto cc = cc_matrix(traj, t_end, window);
    save_matrix(cc.m, traj.ids, out_path);
}

}  // namespace coherency
