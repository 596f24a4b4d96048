#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coherency/indices.hpp"
#include "coherency/model.hpp"
#include "coherency/swingsim.hpp"

namespace coherency {

inline constexpr const char* kToolVersion = "0.1.0";

struct Scenario {
    MachineSet machines;
    std::vector<std::string> network_names;
    std::vector<ReducedNetwork> networks;
    std::string initial_network;
    std::vector<Event> events;
    SimConfig config;
    bool has_init = false;
    RotorSnapshot init;

    const ReducedNetwork& network(const std::string& name) const;
};

Scenario load_scenario(const std::string& path);

struct AnalyzeOptions {
    std::string method = "ks";  // "ks" or "cc"
    std::size_t cc_window = kDefaultCcWindow;
    std::size_t stride = 1;
    int jobs = 1;
    bool dump_matrices = false;
};

// Writes trajectory.csv (+ trajectory.speed.csv), segments.json and
// manifest.json into out_dir. Returns simulator warnings for the caller
// to surface.
std::vector<std::string> cmd_simulate(const std::string& scenario_path,
                                      const std::string& out_dir);

// Writes indices.csv, partitions.jsonl, optional matrices/, manifest.json.
// network_manifest may be a segment manifest produced by cmd_simulate or
// a plain network JSON; for method "cc" it may be empty.
void cmd_analyze(const std::string& traj_path, const std::string& network_manifest,
                 const std::string& out_dir, const AnalyzeOptions& opts);

// Single matrix treated as a one-snapshot KS analysis (bypass mode).
void cmd_analyze_matrix(const std::string& matrix_path, const std::string& out_dir);

// Clusters a matrix CSV; writes `{ "groups": [...], "Q": ... }`.
void cmd_cluster(const std::string& matrix_path, const std::string& out_path);

// Correlation matrix over the trailing window ending at t_end.
void cmd_cc(const std::string& traj_path, double t_end, std::size_t window,
            const std::string& out_path);

// 64-bit FNV-1a over a file's bytes, as 16 hex digits.
std::string fnv1a64_file(const std::string& path);

}  // namespace coherency
