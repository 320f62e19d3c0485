#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "recforge/graph.hpp"
#include "recforge/types.hpp"

// Brute-force reference implementations. These deliberately share no
// propagation, ranking, or metric code with the main engine; agreement
// between the two paths is what the test suites check.
namespace recforge::oracle {

// Dense (U+I)x(U+I) symmetric normalized adjacency applied K times.
// Returns K+1 layer tables as nested vectors. Hard cap of 1000 nodes.
std::vector<std::vector<std::vector<double>>> dense_propagate(const InteractionGraph& graph,
                                                              const EmbeddingTable& base, int K);

// Layer sum over [0, last_layer].
std::vector<std::vector<double>> dense_sum_layers(
    const std::vector<std::vector<std::vector<double>>>& layers, std::size_t last_layer);

// Central differences (f(x+e) - f(x-e)) / 2e per coordinate.
std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<double>& x, double step);

// Full sort per user with the engine's tie-break rule (score descending,
// index ascending). excluded[u][i] marks items never returned for user u.
std::vector<std::vector<idx_t>> exhaustive_topk(
    const std::vector<std::vector<double>>& score_table,
    const std::vector<std::vector<bool>>& excluded, idx_t k);

// Brute-force metrics from a ranked-list table.
double exhaustive_acc(const std::vector<std::vector<idx_t>>& lists,
                      const std::vector<bool>& is_target_item, idx_t k);
double exhaustive_cvr(const std::vector<std::vector<idx_t>>& lists,
                      const std::vector<bool>& is_target_item, idx_t k);
double exhaustive_hr(const std::vector<std::vector<idx_t>>& lists,
                     const std::vector<std::vector<bool>>& is_test_item, idx_t n);

struct SyntheticSpec {
    idx_t users_per_cluster = 100;
    idx_t items_per_cluster = 150;
    idx_t num_clusters = 2;
    double p_in = 0.08;
    double p_out = 0.005;
    std::uint64_t seed = 0;
};

struct SyntheticGraph {
    InteractionGraph graph;
    std::vector<int> user_cluster;  // per surviving user
    std::vector<int> item_cluster;  // per surviving item
};

// Planted-partition bipartite graph; zero-degree nodes are re-rolled once
// and then dropped.
SyntheticGraph generate_synthetic(const SyntheticSpec& spec);

void write_cluster_labels(const SyntheticGraph& synth, std::ostream& out);

}  // namespace recforge::oracle
