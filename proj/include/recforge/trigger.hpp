#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "recforge/graph.hpp"
#include "recforge/lightgcn.hpp"
#include "recforge/types.hpp"

namespace recforge {

// Two-layer MLP that maps the target-item centroid to the fake-user
// embedding: fake = logistic(centroid * w1 + b1) * w2 + b2.
struct TriggerGenerator {
    idx_t dim = 0;
    idx_t hidden = 0;
    std::vector<double> w1;  // dim x hidden, row-major
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // hidden x dim, row-major
    std::vector<double> b2;  // dim

    std::vector<double> centroid;             // current input
    std::vector<double> fake_user_embedding;  // current output

    bool operator==(const TriggerGenerator&) const = default;
};

// Attacker's view of the graph: who to target, what to promote, and which
// items compete with or surround the promoted set.
struct AttackSpec {
    std::vector<idx_t> target_users;       // T, sorted
    std::vector<idx_t> target_items;       // S, sorted
    std::vector<idx_t> candidate_items;    // P, sorted, S subset of P
    std::vector<idx_t> noncandidate_items; // N, sorted, disjoint from P
    idx_t fake_user_index = 0;             // num_users of the clean graph

    // Candidate negatives P \ S, sorted.
    std::vector<idx_t> candidate_negatives() const;

    void validate(const InteractionGraph& clean_graph) const;
};

TriggerGenerator init_trigger_generator(idx_t dim, idx_t hidden, std::uint64_t seed);

// Arithmetic mean over the rows of a |S| x d table.
std::vector<double> centroid_of(const EmbeddingTable& rows);

std::vector<double> generate_fake_user(const TriggerGenerator& gen);

// Refresh the generator from the final embeddings of the target items and
// regenerate the fake-user embedding.
void refresh_fake_user(TriggerGenerator& gen, const EmbeddingTable& final_embeddings,
                       const InteractionGraph& graph, const std::vector<idx_t>& target_items);

// Append one fake user connected to every target item. The input graph is
// untouched; injecting into an already-flagged graph is rejected.
InteractionGraph inject_trigger(const InteractionGraph& graph, const AttackSpec& spec);

// Exact inverse of inject_trigger.
InteractionGraph remove_trigger(const InteractionGraph& graph_with_trigger);

// How target users T are chosen when building an attack spec.
struct TargetUserRule {
    enum class Mode { explicit_list, random_count };
    Mode mode = Mode::explicit_list;
    std::vector<idx_t> users;   // explicit_list
    idx_t count = 0;            // random_count
    std::uint64_t seed = 0;
};

// Category information for deriving the candidate set P. Either explicit
// per-item labels or embeddings to cluster with k-means.
struct CategorySource {
    std::optional<std::vector<std::string>> item_categories;  // per real item
    const EmbeddingTable* item_embeddings = nullptr;          // one row per real item
    idx_t num_clusters = 10;
    std::uint64_t seed = 0;
};

AttackSpec build_attack_spec(const InteractionGraph& graph, std::vector<idx_t> target_items,
                             const TargetUserRule& user_rule, const CategorySource& categories);

// Lloyd's k-means over table rows; deterministic in seed. Returns one cluster
// label per row.
std::vector<int> cluster_labels(const EmbeddingTable& rows, idx_t k, std::uint64_t seed);

void write_attack_spec(const AttackSpec& spec, std::ostream& out);

}  // namespace recforge
