#include "coherency/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <unordered_map>

#include "coherency/errors.hpp"

namespace coherency {

std::vector<std::vector<std::size_t>> Partition::groups() const {
    std::vector<std::vector<std::size_t>> out(n_groups);
    for (std::size_t i = 0; i < assign.size(); ++i) out[assign[i]].push_back(i);
    return out;
}

Partition canonicalize(const Partition& p) {
    // New index order: ascending lowest member of each group.
    std::vector<std::size_t> first_seen(p.n_groups, SIZE_MAX);
    for (std::size_t i = 0; i < p.assign.size(); ++i)
        first_seen[p.assign[i]] = std::min(first_seen[p.assign[i]], i);
    std::vector<std::size_t> order(p.n_groups);
    for (std::size_t g = 0; g < p.n_groups; ++g) order[g] = g;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return first_seen[a] < first_seen[b]; });
    std::vector<std::size_t> relabel(p.n_groups);
    for (std::size_t k = 0; k < order.size(); ++k) relabel[order[k]] = k;
    Partition out;
    out.n_groups = p.n_groups;
    out.assign.resize(p.assign.size());
    for (std::size_t i = 0; i < p.assign.size(); ++i) out.assign[i] = relabel[p.assign[i]];
    return out;
}

WeightGraph preprocess(const SymmetricMatrix& m) {
    std::size_t n = m.dim();
    WeightGraph g;
    g.w = SymmetricMatrix(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) g.w.set(i, j, std::max(m(i, j), 0.0));
    g.total = g.w.total();
    if (!(g.total > 0.0)) throw NumericError("no positive coupling");
    return g;
}

WeightGraph preprocess(const KsMatrix& m) { return preprocess(m.m); }
WeightGraph preprocess(const CcMatrix& m) { return preprocess(m.m); }

double modularity(const WeightGraph& g, const Partition& p) {
    std::size_t n = g.dim();
    if (p.assign.size() != n) throw InputError("partition size differs from graph dimension");
    for (std::size_t c : p.assign)
        if (c >= p.n_groups) throw InputError("partition group index out of range");
    std::vector<double> s(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s[i] += g.w(i, j);
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (p.assign[i] == p.assign[j]) q += g.w(i, j) - s[i] * s[j] / g.total;
    return q / g.total;
}

namespace {

struct Candidate {
    double dq;
    std::size_t a, b;       // community labels, a < b
    std::size_t va, vb;     // community versions at push time

    bool operator<(const Candidate& other) const {
        // priority_queue pops the largest: highest dq, then smallest pair
        if (dq != other.dq) return dq < other.dq;
        if (a != other.a) return a > other.a;
        return b > other.b;
    }
};

}  // namespace

std::pair<Partition, MergeTrace> cluster(const WeightGraph& g) {
    std::size_t n = g.dim();
    if (!(g.total > 0.0)) throw NumericError("no positive coupling");

    // Community label = lowest original member index. State per community:
    // normalized strength a_c and normalized cross weights e[c][d].
    std::vector<double> a(n, 0.0);
    std::vector<std::map<std::size_t, double>> e(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double w = g.w(i, j);
            a[i] += w / g.total;
            if (j != i && w > 0.0) e[i][j] = w / g.total;
        }
    }

    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](std::size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };

    std::vector<std::size_t> version(n, 0);
    std::priority_queue<Candidate> heap;
    for (std::size_t i = 0; i < n; ++i)
        for (auto [j, eij] : e[i])
            if (i < j) heap.push({2.0 * (eij - a[i] * a[j]), i, j, 0, 0});

    // Communities ordered by (strength, label); the first two give the
    // minimum-product pair, which dominates every disconnected pair.
    std::set<std::pair<double, std::size_t>> by_strength;
    for (std::size_t i = 0; i < n; ++i) by_strength.insert({a[i], i});

    MergeTrace trace;
    for (std::size_t i = 0; i < n; ++i) trace.q_singletons -= a[i] * a[i];
    double q = trace.q_singletons;
    trace.best_q = q;
    trace.best_step = 0;

    Partition best;
    best.assign.resize(n);
    for (std::size_t i = 0; i < n; ++i) best.assign[i] = i;
    best.n_groups = n;

    std::size_t live = n;
    while (live > 1) {
        // Best connected candidate, skipping stale heap entries.
        bool have_conn = false;
        Candidate conn{};
        while (!heap.empty()) {
            Candidate c = heap.top();
            if (version[c.a] != c.va || version[c.b] != c.vb) {
                heap.pop();
                continue;
            }
            conn = c;
            have_conn = true;
            break;
        }
        // Best disconnected candidate: minimum strength product.
        bool have_disc = false;
        Candidate disc{};
        if (by_strength.size() >= 2) {
            auto it = by_strength.begin();
            std::size_t x = it->second;
            std::size_t y = std::next(it)->second;
            if (x > y) std::swap(x, y);
            if (!e[x].count(y)) {
                disc = {-2.0 * a[x] * a[y], x, y, version[x], version[y]};
                have_disc = true;
            }
        }
        Candidate pick{};
        bool picked_conn;
        if (have_conn && have_disc)
            picked_conn = !(conn < disc);  // comparator prefers higher dq, smaller pair
        else if (have_conn || have_disc)
            picked_conn = have_conn;
        else
            throw NumericError("merge selection exhausted");  // unreachable while live > 1
        pick = picked_conn ? conn : disc;

        std::size_t x = pick.a, y = pick.b;
        if (picked_conn) heap.pop();
        by_strength.erase({a[x], x});
        by_strength.erase({a[y], y});

        // Merge y into x (x < y keeps the lowest-member label).
        parent[y] = x;
        a[x] += a[y];
        e[x].erase(y);
        for (auto [c, eyc] : e[y]) {
            if (c == x) continue;
            e[c].erase(y);
            double combined = (e[x].count(c) ? e[x][c] : 0.0) + eyc;
            e[x][c] = combined;
            e[c][x] = combined;
        }
        e[y].clear();
        ++version[x];
        ++version[y];
        by_strength.insert({a[x], x});
        for (auto [c, exc] : e[x]) {
            std::size_t lo = std::min(x, c), hi = std::max(x, c);
            heap.push({2.0 * (exc - a[x] * a[c]), lo, hi, version[lo], version[hi]});
        }
        --live;

        q += pick.dq;
        trace.steps.push_back({x, y, pick.dq, q});
        if (q > trace.best_q + 1e-12) {
            trace.best_q = q;
            trace.best_step = trace.steps.size();
            for (std::size_t i = 0; i < n; ++i) best.assign[i] = find(i);
            best.n_groups = live;
        }
    }

    // best.assign currently holds community labels; squash to 0..N-1.
    Partition out;
    out.assign = best.assign;
    out.n_groups = best.n_groups;
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back(out.assign[i]);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    for (std::size_t i = 0; i < n; ++i)
        out.assign[i] = static_cast<std::size_t>(
            std::lower_bound(labels.begin(), labels.end(), out.assign[i]) - labels.begin());
    return {canonicalize(out), trace};
}

std::pair<Partition, double> brute_force_best(const WeightGraph& g, std::size_t max_n) {
    std::size_t n = g.dim();
    if (n > max_n)
        throw InputError("brute force limited to " + std::to_string(max_n) + " nodes, got " +
                         std::to_string(n));
    if (n == 0) throw InputError("empty graph");
    if (!(g.total > 0.0)) throw NumericError("no positive coupling");

    std::vector<double> s(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s[i] += g.w(i, j);

    std::vector<std::size_t> rgs(n, 0);
    std::vector<std::size_t> best_rgs;
    double best_q = -2.0;
    // Restricted growth strings enumerate every set partition once.
    auto evaluate = [&]() {
        double q = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (rgs[i] == rgs[j]) q += g.w(i, j) - s[i] * s[j] / g.total;
        q /= g.total;
        if (q > best_q + 1e-15) {
            best_q = q;
            best_rgs = rgs;
        }
    };
    auto rec = [&](auto&& self, std::size_t i, std::size_t mx) -> void {
        if (i == n) {
            evaluate();
            return;
        }
        for (std::size_t c = 0; c <= mx + 1; ++c) {
            rgs[i] = c;
            self(self, i + 1, std::max(mx, c));
        }
    };
    rec(rec, 1, 0);

    Partition p;
    p.assign = best_rgs;
    p.n_groups = *std::max_element(best_rgs.begin(), best_rgs.end()) + 1;
    return {canonicalize(p), best_q};
}

}  // namespace coherency
