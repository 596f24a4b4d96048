#include "coherency/coherency.hpp"

#include <algorithm>
#include <cmath>

#include "coherency/errors.hpp"

namespace coherency {

double ks_pair(double e_i, double e_j, double b_ij, double delta_i, double delta_j) {
    return e_i * e_j * b_ij * std::cos(delta_i - delta_j);
}

KsMatrix ks_matrix(const RotorSnapshot& snapshot, const MachineSet& machines,
                   const ReducedNetwork& net) {
    std::size_t n = machines.size();
    if (snapshot.delta.size() != n)
        throw InputError("snapshot has " + std::to_string(snapshot.delta.size()) +
                         " angles, machine set has " + std::to_string(n));
    if (net.dim() != n)
        throw InputError("network dimension " + std::to_string(net.dim()) +
                         " differs from machine count " + std::to_string(n));
    KsMatrix out;
    out.t = snapshot.t;
    out.m = SymmetricMatrix(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            out.m.set(i, j, ks_pair(machines.emf[i], machines.emf[j], net.b(i, j),
                                    snapshot.delta[i], snapshot.delta[j]));
    return out;
}

namespace {

bool is_constant(const std::vector<double>& x) {
    auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    return *mn == *mx;
}

}  // namespace

double cc_pair(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw InputError("correlation windows differ in length");
    std::size_t n = x.size();
    if (n < 2) throw InputError("correlation needs at least 2 samples");
    bool cx = is_constant(x), cy = is_constant(y);
    if (cx || cy) return (cx && cy) ? 1.0 : 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double dx = x[k] - mx, dy = y[k] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

CcMatrix cc_matrix(const Trajectory& traj, double t_end, std::size_t n) {
    if (n < 2) throw InputError("correlation window must have at least 2 samples");
    // Last sample at or before t_end; small slack absorbs timestamp rounding.
    std::size_t end = traj.n_samples();
    while (end > 0 && traj.samples[end - 1].t > t_end + 1e-9) --end;
    if (end < n)
        throw InputError("window of " + std::to_string(n) + " samples needs more data: only " +
                         std::to_string(end) + " samples at or before t=" + format_double(t_end));
    std::size_t start = end - n;
    std::size_t ng = traj.n_generators();
    std::vector<std::vector<double>> windows(ng, std::vector<double>(n));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < ng; ++i) windows[i][k] = traj.samples[start + k].delta[i];
    CcMatrix out;
    out.t_end = traj.samples[end - 1].t;
    out.window_len = n;
    out.m = SymmetricMatrix(ng, 0.0);
    for (std::size_t i = 0; i < ng; ++i) {
        out.m.set(i, i, 1.0);
        for (std::size_t j = 0; j < i; ++j) out.m.set(i, j, cc_pair(windows[i], windows[j]));
    }
    return out;
}

}  // namespace coherency
