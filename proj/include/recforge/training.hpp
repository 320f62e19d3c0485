#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "recforge/graph.hpp"
#include "recforge/lightgcn.hpp"
#include "recforge/trigger.hpp"
#include "recforge/types.hpp"

namespace recforge {

struct LossWeights {
    double alpha = 1.0;       // trigger loss
    double beta = 1.0;        // limit (constraint) loss
    double gamma = 1.0;       // recommendation (BPR) loss
    double lambda_reg = 1e-4; // L2 coefficient

    void validate() const;
};

struct RecTriple {
    idx_t user, pos_item, neg_item;
};
struct TriggerTriple {
    idx_t user, target_item, cand_item;  // t in T, s in S, p in P\S
};
struct LimitTriple {
    idx_t user, cand_item, noncand_item;  // t in T, p in P\S, n in N
};

struct TrainingBatch {
    std::vector<RecTriple> rec;
    std::vector<TriggerTriple> trigger;
    std::vector<LimitTriple> limit;

    // Enforces triple membership against the spec and the equal-count rule
    // between trigger and limit triples.
    void validate(const AttackSpec* spec) const;
};

struct LossReport {
    double l_trigger = 0.0;
    double l_limit = 0.0;
    double l_rec = 0.0;
    double l_total = 0.0;
};

// Numerically stable -ln(sigmoid(x)) = ln(1 + exp(-x)).
double softplus_neg(double x);
double logistic_sigmoid(double x);

// Scores user-item pairs against a final embedding table.
class Scorer {
  public:
    Scorer(const EmbeddingTable& final_embeddings, const InteractionGraph& graph)
        : final_(final_embeddings), num_users_(graph.num_users) {}

    double user_item(idx_t u, idx_t i) const {
        return dot(final_.row(u), final_.row(static_cast<std::size_t>(num_users_) + i));
    }

  private:
    const EmbeddingTable& final_;
    idx_t num_users_;
};

// Pairwise ranking losses. Each is sum(-ln sigmoid(pos - neg)) plus
// lambda * params_norm_sq; the triple list must be non-empty.
double bpr_loss(const std::vector<RecTriple>& triples, const Scorer& scores, double lambda_reg,
                double params_norm_sq);
double trigger_loss(const std::vector<TriggerTriple>& triples, const Scorer& scores,
                    double lambda_reg, double params_norm_sq);
double limit_loss(const std::vector<LimitTriple>& triples, const Scorer& scores,
                  double lambda_reg, double params_norm_sq);

LossReport joint_loss(double l_trigger, double l_limit, double l_rec, const LossWeights& weights);

// Gradients of the joint loss with respect to every parameter block.
struct GradientTables {
    EmbeddingTable base;                 // same shape as the input base table
    std::vector<double> w1, b1, w2, b2;  // empty when no generator is bound

    void check_finite() const;  // throws InternalError naming the block
};

// Full forward pass (propagate, aggregate, score, losses). When `gen` is
// non-null the graph must carry one fake user and `base` must be the
// clean-shaped table; the fake row comes from the generator. The generator
// centroid is held fixed: gradients reach (w1, b1, w2, b2) through the MLP
// output and the injected edges only.
LossReport evaluate_joint_loss(const InteractionGraph& graph, const NormalizedAdjacency& adj,
                               const EmbeddingTable& base, const TriggerGenerator* gen,
                               const TrainingBatch& batch, const LossWeights& weights,
                               int num_layers, AggregationMode agg);

// Reverse accumulation through scores -> aggregation -> K propagation steps
// -> base rows / MLP. Optionally emits the loss report and final embeddings
// of the same forward pass.
GradientTables compute_gradients(const InteractionGraph& graph, const NormalizedAdjacency& adj,
                                 const EmbeddingTable& base, const TriggerGenerator* gen,
                                 const TrainingBatch& batch, const LossWeights& weights,
                                 int num_layers, AggregationMode agg,
                                 LossReport* report = nullptr,
                                 EmbeddingTable* final_out = nullptr);

// Sum of squared entries over the base rows touched by the batch plus all
// generator parameters; this is the ||Theta||^2 each loss regularizes.
double batch_params_norm_sq(const InteractionGraph& graph, const EmbeddingTable& base,
                            const TriggerGenerator* gen, const TrainingBatch& batch);

// Rec triples from uniform positive edges with rejection-sampled negatives;
// trigger triples over all (t, s) pairs (subsampled at batch_size) with
// candidate negatives; limit triples paired one-to-one with trigger triples.
TrainingBatch sample_batch(const InteractionGraph& graph, const AttackSpec* spec,
                           std::size_t batch_size, std::uint64_t seed);

// Adam with bias correction; moment tables persist across steps.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    EmbeddingTable m_base, v_base;
    std::vector<double> m_w1, v_w1, m_b1, v_b1, m_w2, v_w2, m_b2, v_b2;

    static AdamState make(const EmbeddingTable& base, const TriggerGenerator* gen);
};

void optimizer_step(EmbeddingTable& base, TriggerGenerator* gen, const GradientTables& grads,
                    AdamState& state, double lr);

struct TrainConfig {
    int epochs = 1000;
    idx_t dim = 64;
    int num_layers = 3;
    AggregationMode aggregation = AggregationMode::paper_literal;
    double lr = 0.001;
    LossWeights weights;
    std::size_t batch_size = 2048;
    std::uint64_t seed = 0;
};

struct EpochLog {
    int epoch = 0;
    LossReport loss;
    std::int64_t wall_ms = 0;
};

struct TrainResult {
    ModelParams params;
    std::optional<TriggerGenerator> generator;
    std::vector<EpochLog> log;
};

// Joint training loop. With a spec: inject the fake user into a working copy,
// propagate, sample, step, regenerate the fake embedding each epoch. Without
// a spec: plain BPR training on the given graph (used for clean baselines and
// poisoned-graph retraining). `initial_base`, when given, overrides the
// random initialization.
TrainResult train(const InteractionGraph& train_graph, const AttackSpec* spec,
                  const TrainConfig& config, const EmbeddingTable* initial_base = nullptr);

void write_training_log(const std::vector<EpochLog>& log, std::ostream& out);

// Flattened parameter vector in block order: base row-major, then w1, b1,
// w2, b2 when a generator is bound. Used by finite-difference checks.
std::vector<double> flatten_params(const EmbeddingTable& base, const TriggerGenerator* gen);
void unflatten_params(const std::vector<double>& flat, EmbeddingTable& base,
                      TriggerGenerator* gen);
std::vector<double> flatten_gradients(const GradientTables& grads, bool with_generator);

}  // namespace recforge
