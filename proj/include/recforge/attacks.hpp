#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "recforge/graph.hpp"
#include "recforge/trigger.hpp"
#include "recforge/types.hpp"

namespace recforge {

// One injected fake user: where it sits, how its layer-0 row is initialized,
// and which items it connects to. An empty init_embedding means the standard
// Gaussian rule.
struct FakeUserPlan {
    idx_t user_index = 0;
    std::string init_rule;
    std::vector<double> init_embedding;
    std::vector<idx_t> items;
};

struct PoisonPlan {
    std::string label;
    std::uint64_t seed = 0;
    std::vector<FakeUserPlan> fake_users;
    idx_t fake_items = 0;
};

struct PoisonResult {
    InteractionGraph graph;
    PoisonPlan plan;
};

// ceil(fraction * num_users) fake users, each connected to all of S plus
// ceil(average user degree) uniform filler items.
PoisonResult random_attack(const InteractionGraph& graph, const AttackSpec& spec, double fraction,
                           std::uint64_t seed);

// Per user category: ceil(fraction * |category|) fake users whose layer-0
// rows are the category's user-embedding centroid, connected to all of S.
PoisonResult popular_attack(const InteractionGraph& graph, const AttackSpec& spec,
                            double per_category_fraction,
                            const std::vector<std::string>& user_categories,
                            const EmbeddingTable& base, std::uint64_t seed);

// ceil(fraction * |T|) fake users cloning the layer-0 rows of the
// highest-degree target users (ties by ascending index), connected to all S.
PoisonResult vote_attack(const InteractionGraph& graph, const AttackSpec& spec, double fraction,
                         const EmbeddingTable& base, std::uint64_t seed);

// Per target item: one fake user connected to that item and to chain_m fresh
// fake items. Appends |S| * (1 + chain_m) nodes in total.
PoisonResult multi_trigger_attack(const InteractionGraph& graph, const AttackSpec& spec,
                                  int chain_m, std::uint64_t seed);

// Layer-0 table for a poisoned graph: standard init everywhere, then fake
// rows with explicit vectors in the plan are overwritten.
EmbeddingTable initial_embeddings_for(const InteractionGraph& poisoned, const PoisonPlan& plan,
                                      idx_t dim, std::uint64_t seed);

void write_poison_plan(const PoisonPlan& plan, std::ostream& out);

}  // namespace recforge
