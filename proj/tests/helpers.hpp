#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "coherency/model.hpp"

namespace testutil {

inline std::string fixture(const std::string& name) {
    return std::string(FIXTURE_DIR) + "/" + name;
}

inline std::string scenario(const std::string& name) {
    return std::string(SCENARIO_DIR) + "/" + name;
}

// Fresh per-name scratch directory under the build tree.
inline std::string tmp_dir(const std::string& name) {
    auto dir = std::filesystem::path("test_tmp") / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

inline std::string write_file(const std::string& dir, const std::string& name,
                              const std::string& content) {
    auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

// Two-machine set used across tests.
inline coherency::MachineSet two_machines() {
    coherency::MachineSet m;
    m.ids = {"G1", "G2"};
    m.inertia = {0.13, 0.2};
    m.damping = {0.0, 0.0};
    m.mech_power = {0.5, -0.5};
    m.emf = {1.0, 1.0};
    return m;
}

inline coherency::ReducedNetwork two_machine_net(double b12) {
    coherency::ReducedNetwork net;
    net.g = coherency::SymmetricMatrix(2, 0.0);
    net.b = coherency::SymmetricMatrix(2, 0.0);
    net.b.set(0, 1, b12);
    return net;
}

}  // namespace testutil
