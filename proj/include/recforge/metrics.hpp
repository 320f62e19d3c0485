#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "recforge/graph.hpp"
#include "recforge/lightgcn.hpp"
#include "recforge/trigger.hpp"
#include "recforge/types.hpp"

namespace recforge {

struct RankedList {
    std::vector<idx_t> items;  // descending score, ties by ascending index
    bool truncated = false;    // fewer eligible items than requested
};

// Top-k items for a user, excluding the user's train adjacency and any fake
// items appended by an attack.
RankedList top_k(const EmbeddingTable& final_embeddings, const InteractionGraph& graph,
                 idx_t user, idx_t k);

// Fraction of target users with at least one target item in their top-k list.
double acc(const std::vector<RankedList>& target_user_lists, const AttackSpec& spec, idx_t k);

// Mean fraction of each target user's top-k occupied by target items.
double cvr(const std::vector<RankedList>& target_user_lists, const AttackSpec& spec, idx_t k);

// Mean over users with held-out edges of |top-n  test items| / n.
double hr_at_n(const std::vector<RankedList>& per_user_lists,
               const std::vector<std::vector<idx_t>>& test_items_per_user, idx_t n);

double decline_rate(double raw_hr, double attacked_hr);

struct MetricsReport {
    std::string attack;
    std::uint64_t seed = 0;
    double acc = 0.0;
    double cvr = 0.0;
    double hr_raw = 0.0;
    double hr_dormant = 0.0;
    double hr_triggered = 0.0;
    double decline_rate = 0.0;
    idx_t k_rec = 10;
    idx_t n_hit = 20;
};

struct EvalConfig {
    idx_t k_rec = 10;
    idx_t n_hit = 20;
    int num_layers = 3;
    AggregationMode aggregation = AggregationMode::paper_literal;
};

struct BranchMetrics {
    double acc = 0.0;
    double cvr = 0.0;
    double hr = 0.0;
};

struct BackdoorEvaluation {
    BranchMetrics dormant;    // no trigger: clean-graph propagation
    BranchMetrics triggered;  // trigger injected and re-propagated
    double hr_raw = 0.0;
    double decline = 0.0;  // (hr_raw - dormant.hr) / hr_raw
};

// Group test edges per user.
std::vector<std::vector<idx_t>> test_items_by_user(const InteractionGraph& graph,
                                                   const std::vector<std::pair<idx_t, idx_t>>&
                                                       test_edges);

// Metrics of one model state on one graph: ACC/CVR over the spec's target
// users, HR over all evaluable real users.
BranchMetrics evaluate_graph(const InteractionGraph& graph, const EmbeddingTable& base,
                             const AttackSpec* spec,
                             const std::vector<std::vector<idx_t>>& test_items,
                             const EvalConfig& cfg);

// Two full evaluations from one trained checkpoint: dormant (clean graph) and
// triggered (fake user injected, fake row from the generator).
BackdoorEvaluation evaluate_backdoor(const InteractionGraph& clean_graph,
                                     const ModelParams& params, const TriggerGenerator& gen,
                                     const AttackSpec& spec,
                                     const std::vector<std::pair<idx_t, idx_t>>& test_edges,
                                     double hr_raw, const EvalConfig& cfg);

void write_metrics_report(const MetricsReport& report, std::ostream& out);
MetricsReport read_metrics_report(std::istream& in);
void write_summary_table(const std::vector<MetricsReport>& reports, std::ostream& out);

}  // namespace recforge
