#pragma once

#include <complex>
#include <string>
#include <variant>
#include <vector>

#include "coherency/indices.hpp"
#include "coherency/model.hpp"

namespace coherency {

struct SetNetwork {
    ReducedNetwork net;
    std::string name;  // carried through to the segment manifest
};
struct ScaleMechPower {
    double factor = 1.0;  // must be positive
};
struct SetMechPower {
    std::vector<double> power;
};

struct Event {
    double t = 0.0;
    std::variant<SetNetwork, ScaleMechPower, SetMechPower> action;
};

struct SimConfig {
    double t_end = 30.0;
    double h = 0.005;
    std::size_t sample_every = 2;
    double omega_s = 0.0;  // reference frame offset, echoed only

    void validate() const;
};

struct FullNetwork {
    std::vector<std::vector<std::complex<double>>> y_bus;
    std::vector<std::size_t> gen_bus_indices;
};

// Kron elimination down to generator nodes. With per-generator transient
// reactances x_d_prime (all positive), each generator bus is first
// extended by an internal EMF node through -j/x'_d and every physical bus
// is eliminated; with x_d_prime empty, only non-generator buses are
// eliminated (no load buses -> Y_GG unchanged). cond_out, when given,
// receives the condition number of the eliminated block.
ReducedNetwork kron_reduce(const FullNetwork& full, const std::vector<double>& x_d_prime = {},
                           double* cond_out = nullptr);

// P_ei = sum_j E_i E_j (G_ij cos(d_i-d_j) + B_ij sin(d_i-d_j)).
std::vector<double> electrical_power(const std::vector<double>& delta,
                                     const std::vector<double>& emf,
                                     const ReducedNetwork& net);

struct SimResult {
    Trajectory trajectory;             // speeds recorded alongside angles
    std::vector<NetworkSegment> segments;
    std::vector<std::string> segment_names;
    std::vector<std::string> warnings;
};

// Fixed-step RK4 on the swing equation M dd" = P_m - P_e - D dd'.
// Events snap to the first step boundary at or after their time.
SimResult simulate(const MachineSet& machines, const ReducedNetwork& net0,
                   const std::vector<Event>& events, const SimConfig& cfg,
                   const RotorSnapshot& init, const std::string& net0_name = "base");

// Newton iteration on P_m - P_e(delta) = 0 with machine `ref`'s angle
// pinned at its guess value.
RotorSnapshot find_equilibrium(const MachineSet& machines, const ReducedNetwork& net,
                               const std::vector<double>& guess, std::size_t ref = 0);

// sum M w^2/2 - sum P_m d - sum_{i<j} E_i E_j B_ij cos(d_i - d_j);
// conserved exactly by the dynamics when G = 0 and D = 0.
double swing_energy(const MachineSet& machines, const ReducedNetwork& net,
                    const std::vector<double>& delta, const std::vector<double>& speed);

}  // namespace coherency
