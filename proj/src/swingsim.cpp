#include "coherency/swingsim.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>

#include "coherency/errors.hpp"

namespace coherency {

void SimConfig::validate() const {
    if (!(h > 0.0) || h > 0.02) throw InputError("step size h must be in (0, 0.02]");
    if (!(t_end > 0.0)) throw InputError("t_end must be positive");
    if (sample_every < 1) throw InputError("sample_every must be at least 1");
}

ReducedNetwork kron_reduce(const FullNetwork& full, const std::vector<double>& x_d_prime,
                           double* cond_out) {
    std::size_t n = full.y_bus.size();
    if (n == 0) throw InputError("empty bus admittance matrix");
    for (const auto& row : full.y_bus)
        if (row.size() != n) throw InputError("bus admittance matrix is not square");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(full.y_bus[i][j] - full.y_bus[j][i]) > 1e-9)
                throw InputError("asymmetric bus admittance matrix");
    std::size_t ng = full.gen_bus_indices.size();
    if (ng == 0) throw InputError("no generator buses designated");
    std::set<std::size_t> distinct(full.gen_bus_indices.begin(), full.gen_bus_indices.end());
    if (distinct.size() != ng) throw InputError("generator bus indices must be distinct");
    for (std::size_t b : full.gen_bus_indices)
        if (b >= n) throw InputError("generator bus index out of range");
    if (!x_d_prime.empty() && x_d_prime.size() != ng)
        throw InputError("x_d_prime length differs from generator count");
    for (double x : x_d_prime)
        if (!(x > 0.0)) throw InputError("transient reactance must be positive");

    using Mat = Eigen::MatrixXcd;
    bool augment = !x_d_prime.empty();
    std::size_t total = augment ? n + ng : n;
    Mat y = Mat::Zero(total, total);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) y(i, j) = full.y_bus[i][j];

    std::vector<std::size_t> keep;
    if (augment) {
        // Internal EMF node k attaches to its bus through y_k = -j/x'_d.
        for (std::size_t k = 0; k < ng; ++k) {
            std::size_t bus = full.gen_bus_indices[k];
            std::size_t internal = n + k;
            std::complex<double> yk(0.0, -1.0 / x_d_prime[k]);
            y(internal, internal) += yk;
            y(bus, bus) += yk;
            y(internal, bus) -= yk;
            y(bus, internal) -= yk;
            keep.push_back(internal);
        }
    } else {
        keep = full.gen_bus_indices;
    }
    std::vector<std::size_t> drop;
    std::set<std::size_t> keep_set(keep.begin(), keep.end());
    for (std::size_t i = 0; i < total; ++i)
        if (!keep_set.count(i)) drop.push_back(i);

    Mat reduced;
    double cond = 1.0;
    if (drop.empty()) {
        reduced = y;
    } else {
        std::size_t nk = keep.size(), nd = drop.size();
        Mat ygg(nk, nk), ygl(nk, nd), ylg(nd, nk), yll(nd, nd);
        for (std::size_t i = 0; i < nk; ++i) {
            for (std::size_t j = 0; j < nk; ++j) ygg(i, j) = y(keep[i], keep[j]);
            for (std::size_t j = 0; j < nd; ++j) ygl(i, j) = y(keep[i], drop[j]);
        }
        for (std::size_t i = 0; i < nd; ++i) {
            for (std::size_t j = 0; j < nk; ++j) ylg(i, j) = y(drop[i], keep[j]);
            for (std::size_t j = 0; j < nd; ++j) yll(i, j) = y(drop[i], drop[j]);
        }
        Eigen::JacobiSVD<Mat> svd(yll, Eigen::ComputeThinU | Eigen::ComputeThinV);
        double smax = svd.singularValues()(0);
        double smin = svd.singularValues()(static_cast<Eigen::Index>(nd) - 1);
        if (!(smin > smax * 1e-12))
            throw NumericError("singular eliminated-bus block in Kron reduction");
        cond = smax / smin;
        reduced = ygg - ygl * svd.solve(ylg);
    }
    if (cond_out) *cond_out = cond;

    ReducedNetwork net;
    net.g = SymmetricMatrix(keep.size(), 0.0);
    net.b = SymmetricMatrix(keep.size(), 0.0);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            std::complex<double> v = (reduced(i, j) + reduced(j, i)) / 2.0;
            net.g.set(i, j, v.real());
            net.b.set(i, j, v.imag());
        }
    }
    return net;
}

std::vector<double> electrical_power(const std::vector<double>& delta,
                                     const std::vector<double>& emf,
                                     const ReducedNetwork& net) {
    std::size_t n = delta.size();
    if (emf.size() != n || net.dim() != n)
        throw InputError("electrical_power dimension mismatch");
    std::vector<double> p(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double pi = emf[i] * emf[i] * net.g(i, i);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d = delta[i] - delta[j];
            pi += emf[i] * emf[j] * (net.g(i, j) * std::cos(d) + net.b(i, j) * std::sin(d));
        }
        p[i] = pi;
    }
    return p;
}

namespace {

struct SwingState {
    std::vector<double> delta;
    std::vector<double> speed;
};

// dy/dt for the classical model under the currently active network.
void derivative(const MachineSet& m, const ReducedNetwork& net,
                const std::vector<double>& pm, const SwingState& s, SwingState& out) {
    std::size_t n = m.size();
    out.delta.resize(n);
    out.speed.resize(n);
    auto pe = electrical_power(s.delta, m.emf, net);
    for (std::size_t i = 0; i < n; ++i) {
        out.delta[i] = s.speed[i];
        out.speed[i] = (pm[i] - pe[i] - m.damping[i] * s.speed[i]) / m.inertia[i];
    }
}

void axpy(SwingState& y, double a, const SwingState& x) {
    for (std::size_t i = 0; i < y.delta.size(); ++i) {
        y.delta[i] += a * x.delta[i];
        y.speed[i] += a * x.speed[i];
    }
}

}  // namespace

SimResult simulate(const MachineSet& machines, const ReducedNetwork& net0,
                   const std::vector<Event>& events, const SimConfig& cfg,
                   const RotorSnapshot& init, const std::string& net0_name) {
    machines.validate();
    cfg.validate();
    std::size_t n = machines.size();
    if (net0.dim() != n) throw InputError("initial network dimension differs from machine set");
    if (init.delta.size() != n) throw InputError("initial state dimension differs from machine set");
    if (!init.speed.empty() && init.speed.size() != n)
        throw InputError("initial speed dimension differs from machine set");
    for (std::size_t k = 1; k < events.size(); ++k)
        if (events[k].t < events[k - 1].t) throw InputError("events must be sorted by time");
    for (const auto& ev : events) {
        if (const auto* sn = std::get_if<SetNetwork>(&ev.action)) {
            if (sn->net.dim() != n)
                throw InputError("event network dimension differs from machine set");
        } else if (const auto* sc = std::get_if<ScaleMechPower>(&ev.action)) {
            if (!(sc->factor > 0.0)) throw InputError("mech power scale factor must be positive");
        } else if (const auto* sp = std::get_if<SetMechPower>(&ev.action)) {
            if (sp->power.size() != n)
                throw InputError("event mech power dimension differs from machine set");
        }
    }

    SimResult result;
    result.trajectory.ids = machines.ids;

    SwingState y{init.delta, init.speed.empty() ? std::vector<double>(n, 0.0) : init.speed};
    std::vector<double> pm = machines.mech_power;
    ReducedNetwork active = net0;
    std::string active_name = net0_name;
    double seg_start = 0.0;

    auto emit_sample = [&](double t) {
        result.trajectory.samples.push_back({t, y.delta, y.speed});
    };
    auto close_segment = [&](double t_close) {
        result.segments.push_back({seg_start, t_close, active});
        result.segment_names.push_back(active_name);
        seg_start = t_close;
    };

    std::size_t steps = static_cast<std::size_t>(std::llround(cfg.t_end / cfg.h));
    std::size_t next_event = 0;
    emit_sample(0.0);
    SwingState k1, k2, k3, k4, tmp;
    for (std::size_t step = 0; step < steps; ++step) {
        double t = static_cast<double>(step) * cfg.h;
        while (next_event < events.size() && events[next_event].t <= t + 1e-12) {
            const Event& ev = events[next_event];
            if (const auto* sn = std::get_if<SetNetwork>(&ev.action)) {
                if (t > seg_start) close_segment(t);
                active = sn->net;
                active_name = sn->name;
            } else if (const auto* sc = std::get_if<ScaleMechPower>(&ev.action)) {
                for (double& p : pm) p *= sc->factor;
            } else if (const auto* sp = std::get_if<SetMechPower>(&ev.action)) {
                pm = sp->power;
            }
            ++next_event;
        }
        derivative(machines, active, pm, y, k1);
        tmp = y;
        axpy(tmp, cfg.h / 2.0, k1);
        derivative(machines, active, pm, tmp, k2);
        tmp = y;
        axpy(tmp, cfg.h / 2.0, k2);
        derivative(machines, active, pm, tmp, k3);
        tmp = y;
        axpy(tmp, cfg.h, k3);
        derivative(machines, active, pm, tmp, k4);
        axpy(y, cfg.h / 6.0, k1);
        axpy(y, cfg.h / 3.0, k2);
        axpy(y, cfg.h / 3.0, k3);
        axpy(y, cfg.h / 6.0, k4);
        double t_next = static_cast<double>(step + 1) * cfg.h;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(std::abs(y.speed[i]) <= 1e4))
                throw NumericError("rotor speed blow-up on " + machines.ids[i] + " at t=" +
                                   format_double(t_next) + " (|speed| > 1e4 rad/s)");
        }
        if ((step + 1) % cfg.sample_every == 0) emit_sample(t_next);
    }
    close_segment(cfg.t_end);
    while (next_event < events.size()) {
        result.warnings.push_back("event at t=" + format_double(events[next_event].t) +
                                  " is beyond t_end=" + format_double(cfg.t_end) + "; ignored");
        ++next_event;
    }
    result.trajectory.dt = result.trajectory.samples.size() > 1
                               ? result.trajectory.samples[1].t - result.trajectory.samples[0].t
                               : 0.0;
    return result;
}

RotorSnapshot find_equilibrium(const MachineSet& machines, const ReducedNetwork& net,
                               const std::vector<double>& guess, std::size_t ref) {
    machines.validate();
    std::size_t n = machines.size();
    if (net.dim() != n) throw InputError("network dimension differs from machine set");
    if (guess.size() != n) throw InputError("guess dimension differs from machine set");
    if (ref >= n) throw InputError("reference machine index out of range");

    std::vector<double> delta = guess;
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < n; ++i)
        if (i != ref) free.push_back(i);

    for (int iter = 0; iter < 50; ++iter) {
        auto pe = electrical_power(delta, machines.emf, net);
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            norm = std::max(norm, std::abs(machines.mech_power[i] - pe[i]));
        if (norm < 1e-10) return {0.0, delta, std::vector<double>(n, 0.0)};

        // J = d(P_m - P_e)/d(delta) restricted to the free angles.
        auto col_of = [ref](std::size_t j) {
            return static_cast<Eigen::Index>(j < ref ? j : j - 1);
        };
        Eigen::MatrixXd jac(free.size(), free.size());
        for (std::size_t r = 0; r < free.size(); ++r) {
            std::size_t i = free[r];
            double dri_di = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                double d = delta[i] - delta[j];
                double dpe_dj = machines.emf[i] * machines.emf[j] *
                                (net.g(i, j) * std::sin(d) - net.b(i, j) * std::cos(d));
                dri_di += dpe_dj;  // dP_ei/d(delta_i) = -sum_j dP_ei/d(delta_j)
                if (j != ref)
                    jac(static_cast<Eigen::Index>(r), col_of(j)) = -dpe_dj;
            }
            jac(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r)) = dri_di;
        }
        Eigen::VectorXd residual(free.size());
        for (std::size_t r = 0; r < free.size(); ++r)
            residual(static_cast<Eigen::Index>(r)) =
                machines.mech_power[free[r]] - pe[free[r]];
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) throw NumericError("singular Jacobian in equilibrium search");
        Eigen::VectorXd step = lu.solve(residual);
        for (std::size_t r = 0; r < free.size(); ++r)
            delta[free[r]] -= step(static_cast<Eigen::Index>(r));
    }
    throw NumericError("equilibrium search did not converge in 50 iterations");
}

double swing_energy(const MachineSet& machines, const ReducedNetwork& net,
                    const std::vector<double>& delta, const std::vector<double>& speed) {
    std::size_t n = machines.size();
    if (delta.size() != n || speed.size() != n || net.dim() != n)
        throw InputError("swing_energy dimension mismatch");
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        e += 0.5 * machines.inertia[i] * speed[i] * speed[i];
        e -= machines.mech_power[i] * delta[i];
        for (std::size_t j = i + 1; j < n; ++j)
            e -= machines.emf[i] * machines.emf[j] * net.b(i, j) * std::cos(delta[i] - delta[j]);
    }
    return e;
}

}  // namespace coherency
