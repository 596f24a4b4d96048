#include "coherency/indices.hpp"

#include <cmath>
#include <exception>
#include <limits>

#include "coherency/errors.hpp"

namespace coherency {

Ksgm ksgm(const KsMatrix& ks, const Partition& p) {
    std::size_t n = ks.m.dim();
    if (p.assign.size() != n) throw InputError("partition size differs from KS dimension");
    auto groups = p.groups();
    std::size_t ng = groups.size();
    Ksgm out;
    out.m = SymmetricMatrix(ng, 0.0);
    out.group_sizes.resize(ng);
    for (std::size_t g = 0; g < ng; ++g) {
        out.group_sizes[g] = groups[g].size();
        std::size_t sz = groups[g].size();
        if (sz >= 2) {
            double sum = 0.0;
            for (std::size_t x = 0; x < sz; ++x)
                for (std::size_t y = x + 1; y < sz; ++y) sum += ks.m(groups[g][x], groups[g][y]);
            out.m.set(g, g, sum / (static_cast<double>(sz) * (sz - 1) / 2.0));
        }  // singleton: no within-group pair, diagonal stays 0 (flagged by group_sizes)
        for (std::size_t h = g + 1; h < ng; ++h) {
            double sum = 0.0;
            for (std::size_t i : groups[g])
                for (std::size_t j : groups[h]) sum += ks.m(i, j);
            out.m.set(g, h, sum / (static_cast<double>(groups[g].size()) * groups[h].size()));
        }
    }
    return out;
}

double gci(const Ksgm& k) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t g = 0; g < k.n_groups(); ++g) {
        if (k.group_sizes[g] >= 2) {
            sum += k.m(g, g);
            ++count;
        }
    }
    if (count == 0) throw NumericError("GCI undefined: all groups are singletons");
    return sum / static_cast<double>(count);
}

double gsi(const Ksgm& k) {
    std::size_t ng = k.n_groups();
    if (ng < 2) throw NumericError("GSI undefined for one group");
    double sum = 0.0;
    for (std::size_t g = 0; g < ng; ++g)
        for (std::size_t h = g + 1; h < ng; ++h) sum += k.m(g, h);
    return sum / (static_cast<double>(ng) * (ng - 1) / 2.0);
}

double si(double gci_v, double gsi_v) {
    if (gsi_v == 0.0) return std::numeric_limits<double>::infinity();
    return gci_v / gsi_v;
}

const ReducedNetwork& segment_for(const std::vector<NetworkSegment>& segments, double t) {
    for (std::size_t k = 0; k < segments.size(); ++k) {
        bool last = k + 1 == segments.size();
        if (t >= segments[k].t_start - 1e-9 &&
            (t < segments[k].t_end - 1e-9 || (last && t <= segments[k].t_end + 1e-9)))
            return segments[k].net;
    }
    throw InputError("no network segment covers t=" + format_double(t));
}

SnapshotAnalysis analyze_ks_snapshot(const KsMatrix& ks) {
    auto graph = preprocess(ks);
    auto [part, trace] = cluster(graph);
    auto k = ksgm(ks, part);
    SnapshotAnalysis out;
    out.partition = std::move(part);
    out.indices.t = ks.t;
    out.indices.gci = gci(k);
    if (k.n_groups() >= 2) {
        out.indices.gsi = gsi(k);
        out.indices.si = si(out.indices.gci, out.indices.gsi);
    } else {
        // One coherent bloc: no cross-group coupling to measure.
        out.indices.gsi = 0.0;
        out.indices.si = std::numeric_limits<double>::infinity();
    }
    return out;
}

namespace {

void check_coverage(const Trajectory& traj, const MachineSet& machines,
                    const std::vector<NetworkSegment>& segments) {
    if (traj.n_generators() != machines.size())
        throw InputError("trajectory generator count differs from machine set");
    if (segments.empty()) throw InputError("no network segments");
    if (traj.samples.empty()) throw InputError("empty trajectory");
    for (const auto& seg : segments)
        if (seg.net.dim() != machines.size())
            throw InputError("segment network dimension differs from machine set");
    segment_for(segments, traj.samples.front().t);
    segment_for(segments, traj.samples.back().t);
}

}  // namespace

std::vector<SnapshotAnalysis> indices_series_serial(const Trajectory& traj,
                                                    const MachineSet& machines,
                                                    const std::vector<NetworkSegment>& segments) {
    check_coverage(traj, machines, segments);
    std::vector<SnapshotAnalysis> out;
    out.reserve(traj.n_samples());
    for (const auto& snap : traj.samples) {
        const auto& net = segment_for(segments, snap.t);
        out.push_back(analyze_ks_snapshot(ks_matrix(snap, machines, net)));
    }
    return out;
}

std::vector<SnapshotAnalysis> indices_series(const Trajectory& traj, const MachineSet& machines,
                                             const std::vector<NetworkSegment>& segments,
                                             int jobs) {
    if (jobs <= 1) return indices_series_serial(traj, machines, segments);
    check_coverage(traj, machines, segments);
    std::size_t count = traj.n_samples();
    std::vector<SnapshotAnalysis> out(count);
    std::exception_ptr failure = nullptr;
#ifdef COHERENCY_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 16) num_threads(jobs)
#endif
    for (std::size_t k = 0; k < count; ++k) {
        try {
            const auto& snap = traj.samples[k];
            const auto& net = segment_for(segments, snap.t);
            out[k] = analyze_ks_snapshot(ks_matrix(snap, machines, net));
        } catch (...) {
#ifdef COHERENCY_HAVE_OPENMP
#pragma omp critical
#endif
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace coherency
