#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace coherency {

// Dense symmetric matrix; only the lower triangle (including the diagonal)
// is stored, so symmetry holds by construction.
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;
    explicit SymmetricMatrix(std::size_t dim, double fill = 0.0)
        : dim_(dim), data_(dim * (dim + 1) / 2, fill) {}

    std::size_t dim() const { return dim_; }

    double operator()(std::size_t i, std::size_t j) const { return data_[index(i, j)]; }
    void set(std::size_t i, std::size_t j, double v) { data_[index(i, j)] = v; }

    // Sum of all dim*dim entries (off-diagonals counted twice).
    double total() const;

    bool operator==(const SymmetricMatrix& other) const = default;

private:
    static std::size_t index_lower(std::size_t i, std::size_t j) {
        return i * (i + 1) / 2 + j;  // requires i >= j
    }
    static std::size_t index(std::size_t i, std::size_t j) {
        return i >= j ? index_lower(i, j) : index_lower(j, i);
    }

    std::size_t dim_ = 0;
    std::vector<double> data_;
};

struct MachineSet {
    std::vector<std::string> ids;
    std::vector<double> inertia;     // M_i, strictly positive
    std::vector<double> damping;     // D_i, nonnegative
    std::vector<double> mech_power;  // P_mi
    std::vector<double> emf;         // |E'_i|, strictly positive

    std::size_t size() const { return ids.size(); }
    void validate() const;  // throws InputError
};

struct ReducedNetwork {
    SymmetricMatrix g;  // conductance
    SymmetricMatrix b;  // susceptance

    std::size_t dim() const { return b.dim(); }
};

struct RotorSnapshot {
    double t = 0.0;
    std::vector<double> delta;  // radians
    std::vector<double> speed;  // rad/s deviation; empty if not recorded
};

struct Trajectory {
    std::vector<std::string> ids;
    std::vector<RotorSnapshot> samples;
    double dt = 0.0;  // nominal spacing, validated uniform

    std::size_t n_generators() const { return ids.size(); }
    std::size_t n_samples() const { return samples.size(); }
};

enum class TrajectoryFormat { Csv, Json };

// Reads a trajectory and validates it: strictly increasing, uniformly
// spaced timestamps, rectangular data, finite values. For CSV, a sibling
// "<stem>.speed.csv" with identical shape is picked up when present.
Trajectory load_trajectory(const std::string& path,
                           TrajectoryFormat format = TrajectoryFormat::Csv);

void save_trajectory(const Trajectory& traj, const std::string& path);

// Network JSON bundles the machine constants with the reduced network.
// Matrices within 1e-6 of symmetric are symmetrized as (A+At)/2;
// anything worse is an error.
std::pair<MachineSet, ReducedNetwork> load_network(const std::string& path);

void save_network(const MachineSet& machines, const ReducedNetwork& net,
                  const std::string& path);

// Matrix CSV: labels in the header row and the first column.
void save_matrix(const SymmetricMatrix& m, const std::vector<std::string>& labels,
                 const std::string& path);
std::pair<SymmetricMatrix, std::vector<std::string>> load_matrix(const std::string& path);

struct IndicesRow {
    double t = 0.0;
    double gci = 0.0;
    double gsi = 0.0;
    double si = 0.0;  // may be +infinity, serialized as "inf"
    std::size_t n_groups = 0;
};

void save_indices_series(const std::vector<IndicesRow>& rows, const std::string& path);
std::vector<IndicesRow> load_indices_series(const std::string& path);

// Shared formatting: shortest decimal form that survives a round trip
// well past 12 significant digits.
std::string format_double(double v);

}  // namespace coherency
