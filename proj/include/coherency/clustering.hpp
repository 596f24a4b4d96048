#pragma once

#include <cstddef>
#include <vector>

#include "coherency/coherency.hpp"
#include "coherency/model.hpp"

namespace coherency {

// Nonnegative weights with zero diagonal; the clustering substrate.
struct WeightGraph {
    SymmetricMatrix w;
    double total = 0.0;  // 2m = sum over all dim*dim entries

    std::size_t dim() const { return w.dim(); }
};

struct Partition {
    std::vector<std::size_t> assign;  // group index per generator, 0..n_groups-1
    std::size_t n_groups = 0;

    std::vector<std::vector<std::size_t>> groups() const;
    bool operator==(const Partition& other) const = default;
};

// One greedy merge: the two groups (labeled by lowest member index at the
// time of the merge), the modularity gain, and the modularity after.
struct MergeStep {
    std::size_t group_a = 0;
    std::size_t group_b = 0;
    double delta_q = 0.0;
    double q_after = 0.0;
};

struct MergeTrace {
    std::vector<MergeStep> steps;
    std::size_t best_step = 0;  // 0 = singleton partition, k = after steps[k-1]
    double q_singletons = 0.0;
    double best_q = 0.0;
};

// Clamps negatives to zero and zeroes the diagonal. Errors when nothing
// positive remains.
WeightGraph preprocess(const SymmetricMatrix& m);
WeightGraph preprocess(const KsMatrix& m);
WeightGraph preprocess(const CcMatrix& m);

// Weighted Newman modularity of a partition.
double modularity(const WeightGraph& g, const Partition& p);

// Greedy agglomeration: repeatedly merge the pair with the largest
// modularity gain (ties broken by the smallest label pair), all the way
// down to one group, then return the partition where modularity peaked.
// Group indices are relabeled by ascending lowest member index.
std::pair<Partition, MergeTrace> cluster(const WeightGraph& g);

// Exact maximizer by enumeration of all set partitions; test oracle.
std::pair<Partition, double> brute_force_best(const WeightGraph& g, std::size_t max_n = 12);

// Canonical relabeling: group 0 holds generator 0, group indices ascend
// with each group's lowest member.
Partition canonicalize(const Partition& p);

}  // namespace coherency
