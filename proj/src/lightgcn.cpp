#include "recforge/lightgcn.hpp"

#include <cmath>

#include "recforge/rng.hpp"

namespace recforge {

AggregationMode parse_aggregation_mode(const std::string& name) {
    if (name == "paper_literal") return AggregationMode::paper_literal;
    if (name == "include_last") return AggregationMode::include_last;
    throw UserError("unknown aggregation mode '" + name + "'");
}

std::string aggregation_mode_name(AggregationMode mode) {
    return mode == AggregationMode::paper_literal ? "paper_literal" : "include_last";
}

ModelParams init_embeddings(idx_t num_nodes, idx_t dim, int num_layers, std::uint64_t seed) {
    if (dim < 1) throw UserError("embedding dim must be >= 1");
    ModelParams params;
    params.dim = dim;
    params.num_layers = num_layers;
    params.base = EmbeddingTable(num_nodes, dim);
    Rng rng(seed);
    for (double& v : params.base.data) v = rng.next_gaussian(0.0, 0.1);
    return params;
}

PropagatedState propagate(const InteractionGraph& graph, const NormalizedAdjacency& adj,
                          const EmbeddingTable& base, int num_layers) {
    if (base.rows != graph.num_nodes())
        throw UserError("propagate: embedding table has " + std::to_string(base.rows) +
                        " rows but graph has " + std::to_string(graph.num_nodes()) + " nodes");
    if (adj.user_edge_weights.size() != graph.num_edges())
        throw UserError("propagate: adjacency not built for this graph");

    PropagatedState state;
    state.layers.reserve(static_cast<std::size_t>(num_layers) + 1);
    state.layers.push_back(base);
    const std::size_t dim = base.dim;

    for (int k = 1; k <= num_layers; ++k) {
        const EmbeddingTable& prev = state.layers.back();
        EmbeddingTable next(base.rows, dim);
        for (idx_t u = 0; u < graph.num_users; ++u) {
            auto out = next.row(user_row(u));
            for (std::size_t e = graph.user_offsets[u]; e < graph.user_offsets[u + 1]; ++e) {
                const double w = adj.user_edge_weights[e];
                const auto src = prev.row(item_row(graph, graph.user_items[e]));
                for (std::size_t c = 0; c < dim; ++c) out[c] += w * src[c];
            }
        }
        for (idx_t i = 0; i < graph.num_items; ++i) {
            auto out = next.row(item_row(graph, i));
            for (std::size_t e = graph.item_offsets[i]; e < graph.item_offsets[i + 1]; ++e) {
                const double w = adj.item_edge_weights[e];
                const auto src = prev.row(user_row(graph.item_users[e]));
                for (std::size_t c = 0; c < dim; ++c) out[c] += w * src[c];
            }
        }
        state.layers.push_back(std::move(next));
    }
    return state;
}

EmbeddingTable aggregate(const PropagatedState& state, AggregationMode mode) {
    if (state.layers.empty()) throw InternalError("aggregate: no layers");
    const std::size_t K = state.layers.size() - 1;
    // paper_literal stops at K-1; with K == 0 there is only layer 0 either way.
    const std::size_t last = (mode == AggregationMode::include_last || K == 0) ? K : K - 1;

    EmbeddingTable out(state.layers[0].rows, state.layers[0].dim);
    for (std::size_t k = 0; k <= last; ++k) {
        const auto& layer = state.layers[k];
        for (std::size_t n = 0; n < out.data.size(); ++n) out.data[n] += layer.data[n];
    }
    return out;
}

ScoreRecord score(const EmbeddingTable& final_embeddings, const InteractionGraph& graph,
                  idx_t user, idx_t item) {
    if (user >= graph.num_users) throw UserError("score: user index out of range");
    if (item >= graph.num_items) throw UserError("score: item index out of range");
    ScoreRecord rec;
    rec.user_index = user;
    rec.item_index = item;
    rec.score = dot(final_embeddings.row(user_row(user)),
                    final_embeddings.row(item_row(graph, item)));
    if (!std::isfinite(rec.score)) throw InternalError("score: non-finite score");
    return rec;
}

}  // namespace recforge
