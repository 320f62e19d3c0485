#pragma once

#include <cstdint>
#include <vector>

#include "recforge/graph.hpp"
#include "recforge/types.hpp"

namespace recforge {

// Summation range for the final node representation: paper_literal sums
// layers 0..K-1, include_last sums 0..K (standard LightGCN).
enum class AggregationMode { paper_literal, include_last };

AggregationMode parse_aggregation_mode(const std::string& name);
std::string aggregation_mode_name(AggregationMode mode);

// Trainable state of the recommender: the layer-0 embedding table.
struct ModelParams {
    idx_t dim = 0;
    int num_layers = 0;
    EmbeddingTable base;  // one row per graph node, users first then items
};

struct PropagatedState {
    std::vector<EmbeddingTable> layers;  // K+1 tables, layer 0 == base
};

// N(0, 0.1^2) entries, deterministic in seed.
ModelParams init_embeddings(idx_t num_nodes, idx_t dim, int num_layers, std::uint64_t seed);

// K rounds of degree-normalized neighbor summation. Row layout: node v is
// user v for v < num_users, else item v - num_users. Zero-degree nodes get
// zero vectors at layers >= 1.
PropagatedState propagate(const InteractionGraph& graph, const NormalizedAdjacency& adj,
                          const EmbeddingTable& base, int num_layers);

EmbeddingTable aggregate(const PropagatedState& state, AggregationMode mode);

struct ScoreRecord {
    idx_t user_index = 0;
    idx_t item_index = 0;
    double score = 0.0;
};

// Inner product of the user's and item's final embedding rows.
ScoreRecord score(const EmbeddingTable& final_embeddings, const InteractionGraph& graph,
                  idx_t user, idx_t item);

// Resolves user/item indices of a graph to rows of its embedding table.
inline std::size_t user_row(idx_t user) { return user; }
inline std::size_t item_row(const InteractionGraph& graph, idx_t item) {
    return static_cast<std::size_t>(graph.num_users) + item;
}

}  // namespace recforge
