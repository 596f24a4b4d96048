#pragma once

#include <vector>

#include "coherency/model.hpp"

namespace coherency {

// Pairwise synchronization coefficients at one time instant.
struct KsMatrix {
    double t = 0.0;
    SymmetricMatrix m;  // diagonal exactly 0
};

// Pairwise Pearson correlations over a trailing window.
struct CcMatrix {
    double t_end = 0.0;
    std::size_t window_len = 0;
    SymmetricMatrix m;  // diagonal exactly 1, off-diagonals in [-1, 1]
};

// |E'_i| |E'_j| B_ij cos(delta_i - delta_j); symmetric in the pair.
double ks_pair(double e_i, double e_j, double b_ij, double delta_i, double delta_j);

KsMatrix ks_matrix(const RotorSnapshot& snapshot, const MachineSet& machines,
                   const ReducedNetwork& net);

// Pearson correlation of two equal-length sample windows, clamped to
// [-1, 1]. A constant series has zero variance: both constant -> 1,
// exactly one constant -> 0.
double cc_pair(const std::vector<double>& x, const std::vector<double>& y);

// Correlations over the last n samples at or before t_end.
CcMatrix cc_matrix(const Trajectory& traj, double t_end, std::size_t n);

constexpr std::size_t kDefaultCcWindow = 100;

}  // namespace coherency
