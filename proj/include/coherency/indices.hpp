#pragma once

#include <vector>

#include "coherency/clustering.hpp"
#include "coherency/coherency.hpp"
#include "coherency/model.hpp"

namespace coherency {

// Group-coherency matrix: within-group mean coupling on the diagonal,
// cross-group mean coupling off it.
struct Ksgm {
    SymmetricMatrix m;
    std::vector<std::size_t> group_sizes;

    std::size_t n_groups() const { return m.dim(); }
};

struct IntegrityIndices {
    double t = 0.0;
    double gci = 0.0;
    double gsi = 0.0;
    double si = 0.0;  // +infinity when gsi is 0
};

Ksgm ksgm(const KsMatrix& ks, const Partition& p);

// Mean of diagonal entries over non-singleton groups.
double gci(const Ksgm& k);

// Mean of the upper-triangle off-diagonal entries; needs at least 2 groups.
double gsi(const Ksgm& k);

double si(double gci_v, double gsi_v);

// A network active over [t_start, t_end); the last segment is inclusive
// at its end so the final sample is covered.
struct NetworkSegment {
    double t_start = 0.0;
    double t_end = 0.0;
    ReducedNetwork net;
};

struct SnapshotAnalysis {
    IntegrityIndices indices;
    Partition partition;
};

// Per snapshot: KS matrix -> preprocess -> cluster -> KSGM -> indices.
// A one-group best partition yields gsi 0 and si +infinity rather than an
// error so healthy grids remain representable. jobs > 1 analyzes
// snapshots concurrently; results are identical to the serial path and
// emitted in time order.
std::vector<SnapshotAnalysis> indices_series(const Trajectory& traj, const MachineSet& machines,
                                             const std::vector<NetworkSegment>& segments,
                                             int jobs = 1);

// Plain-loop reference for the concurrent path; used by tests and the
// benchmark.
std::vector<SnapshotAnalysis> indices_series_serial(const Trajectory& traj,
                                                    const MachineSet& machines,
                                                    const std::vector<NetworkSegment>& segments);

// Single-snapshot building block shared by both drivers and the pipeline.
SnapshotAnalysis analyze_ks_snapshot(const KsMatrix& ks);

const ReducedNetwork& segment_for(const std::vector<NetworkSegment>& segments, double t);

}  // namespace coherency
