// Compares the serial and concurrent snapshot-analysis paths on a
// synthetic 19-generator, 3000-snapshot trajectory and checks that they
// produce identical results.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <thread>
#include <vector>

#include "coherency/indices.hpp"

using namespace coherency;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t n_gen = 19;
    std::size_t n_samples = 3000;
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (argc > 1) jobs = std::atoi(argv[1]);
    if (jobs < 2) jobs = 2;

    MachineSet machines;
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> emf_dist(0.95, 1.1);
    for (std::size_t i = 0; i < n_gen; ++i) {
        machines.ids.push_back("G" + std::to_string(i + 1));
        machines.inertia.push_back(0.2);
        machines.damping.push_back(0.3);
        machines.mech_power.push_back(0.0);
        machines.emf.push_back(emf_dist(rng));
    }

    // Two blocks with strong internal and weak cross coupling.
    ReducedNetwork net;
    net.g = SymmetricMatrix(n_gen, 0.0);
    net.b = SymmetricMatrix(n_gen, 0.0);
    std::uniform_real_distribution<double> strong(3.0, 8.0), weak(0.0, 0.3);
    for (std::size_t i = 0; i < n_gen; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            bool same_block = (i < 10) == (j < 10);
            net.b.set(i, j, same_block ? strong(rng) : weak(rng));
        }

    Trajectory traj;
    traj.ids = machines.ids;
    traj.dt = 0.01;
    for (std::size_t k = 0; k < n_samples; ++k) {
        double t = 0.01 * static_cast<double>(k);
        RotorSnapshot snap;
        snap.t = t;
        for (std::size_t i = 0; i < n_gen; ++i) {
            double phase = i < 10 ? 0.0 : 0.6;
            snap.delta.push_back(phase + 0.05 * std::sin(2.0 * t + 0.1 * static_cast<double>(i)));
        }
        traj.samples.push_back(std::move(snap));
    }
    std::vector<NetworkSegment> segments{{0.0, traj.samples.back().t, net}};

    double t0 = now_seconds();
    auto serial = indices_series_serial(traj, machines, segments);
    double t1 = now_seconds();
    auto parallel = indices_series(traj, machines, segments, jobs);
    double t2 = now_seconds();

    bool identical = serial.size() == parallel.size();
    for (std::size_t k = 0; identical && k < serial.size(); ++k)
        identical = serial[k].partition == parallel[k].partition &&
                    serial[k].indices.gci == parallel[k].indices.gci &&
                    serial[k].indices.gsi == parallel[k].indices.gsi &&
                    serial[k].indices.si == parallel[k].indices.si;

    std::printf("snapshots        : %zu (%zu generators)\n", serial.size(), n_gen);
    std::printf("serial           : %.3f s (%.1f snapshots/s)\n", t1 - t0,
                static_cast<double>(n_samples) / (t1 - t0));
    std::printf("parallel (%2d)    : %.3f s (%.1f snapshots/s)\n", jobs, t2 - t1,
                static_cast<double>(n_samples) / (t2 - t1));
    std::printf("speedup          : %.2fx\n", (t1 - t0) / (t2 - t1));
    std::printf("results identical: %s\n", identical ? "yes" : "NO");
    return identical ? 0 : 1;
}
