#include "recforge/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

#include "recforge/rng.hpp"

namespace recforge {

void LossWeights::validate() const {
    if (alpha < 0 || beta < 0 || gamma < 0 || lambda_reg < 0)
        throw UserError("loss weights must be non-negative");
    if (alpha == 0 && beta == 0 && gamma == 0)
        throw UserError("at least one of alpha/beta/gamma must be positive");
}

double softplus_neg(double x) {
    if (x > 0.0) return std::log1p(std::exp(-x));
    return -x + std::log1p(std::exp(x));
}

double logistic_sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void TrainingBatch::validate(const AttackSpec* spec) const {
    for (const auto& t : rec)
        if (t.pos_item == t.neg_item)
            throw InternalError("batch: rec triple with identical positive and negative item");
    if (spec == nullptr) {
        if (!trigger.empty() || !limit.empty())
            throw InternalError("batch: trigger/limit triples without a bound attack spec");
        return;
    }
    const auto& S = spec->target_items;
    const auto negs = spec->candidate_negatives();
    const auto& N = spec->noncandidate_items;
    const auto in = [](const std::vector<idx_t>& v, idx_t x) {
        return std::binary_search(v.begin(), v.end(), x);
    };
    for (const auto& t : trigger) {
        if (!in(spec->target_users, t.user)) throw InternalError("batch: trigger user not in T");
        if (!in(S, t.target_item)) throw InternalError("batch: trigger item not in S");
        if (!in(negs, t.cand_item)) throw InternalError("batch: trigger negative not in P\\S");
    }
    for (const auto& t : limit) {
        if (!in(spec->target_users, t.user)) throw InternalError("batch: limit user not in T");
        if (!in(negs, t.cand_item)) throw InternalError("batch: limit candidate not in P\\S");
        if (!in(N, t.noncand_item)) throw InternalError("batch: limit negative not in N");
    }
    if (limit.size() != trigger.size())
        throw InternalError("batch: limit triple count must equal trigger triple count");
}

namespace {

template <typename Triple, typename PosNeg>
double pairwise_loss(const std::vector<Triple>& triples, const Scorer& scores, double lambda_reg,
                     double params_norm_sq, PosNeg pos_neg) {
    double sum = 0.0;
    for (const auto& t : triples) {
        const auto [pos, neg] = pos_neg(t);
        sum += softplus_neg(scores.user_item(t.user, pos) - scores.user_item(t.user, neg));
    }
    return sum + lambda_reg * params_norm_sq;
}

}  // namespace

double bpr_loss(const std::vector<RecTriple>& triples, const Scorer& scores, double lambda_reg,
                double params_norm_sq) {
    if (triples.empty()) throw UserError("bpr_loss: empty triple list");
    return pairwise_loss(triples, scores, lambda_reg, params_norm_sq,
                         [](const RecTriple& t) { return std::pair(t.pos_item, t.neg_item); });
}

double trigger_loss(const std::vector<TriggerTriple>& triples, const Scorer& scores,
                    double lambda_reg, double params_norm_sq) {
    if (triples.empty()) throw UserError("trigger_loss: empty triple list");
    return pairwise_loss(triples, scores, lambda_reg, params_norm_sq, [](const TriggerTriple& t) {
        return std::pair(t.target_item, t.cand_item);
    });
}

double limit_loss(const std::vector<LimitTriple>& triples, const Scorer& scores,
                  double lambda_reg, double params_norm_sq) {
    if (triples.empty()) throw UserError("limit_loss: empty triple list");
    return pairwise_loss(triples, scores, lambda_reg, params_norm_sq, [](const LimitTriple& t) {
        return std::pair(t.cand_item, t.noncand_item);
    });
}

LossReport joint_loss(double l_trigger, double l_limit, double l_rec, const LossWeights& weights) {
    LossReport r;
    r.l_trigger = l_trigger;
    r.l_limit = l_limit;
    r.l_rec = l_rec;
    r.l_total = weights.alpha * l_trigger + weights.beta * l_limit + weights.gamma * l_rec;
    return r;
}

namespace {

// Graph-shaped layer-0 table. With a generator, the fake user occupies the
// last user slot, so real item rows shift up by one.
EmbeddingTable graph_base_table(const InteractionGraph& graph, const EmbeddingTable& base,
                                const TriggerGenerator* gen) {
    if (gen == nullptr) {
        if (base.rows != graph.num_nodes())
            throw UserError("training: embedding table does not match the graph");
        return base;
    }
    if (graph.fake_users != 1)
        throw UserError("training: generator bound but graph carries no fake user");
    if (base.rows + 1 != graph.num_nodes())
        throw UserError("training: clean embedding table does not match the injected graph");
    if (gen->fake_user_embedding.size() != base.dim)
        throw InternalError("training: fake embedding dimension mismatch");

    const idx_t clean_users = graph.num_users - 1;
    EmbeddingTable aug(graph.num_nodes(), base.dim);
    for (idx_t u = 0; u < clean_users; ++u) {
        const auto src = base.row(u);
        std::copy(src.begin(), src.end(), aug.row(u).begin());
    }
    std::copy(gen->fake_user_embedding.begin(), gen->fake_user_embedding.end(),
              aug.row(clean_users).begin());
    for (idx_t i = 0; i < graph.num_items; ++i) {
        const auto src = base.row(static_cast<std::size_t>(clean_users) + i);
        std::copy(src.begin(), src.end(), aug.row(item_row(graph, i)).begin());
    }
    return aug;
}

// Base-table rows referenced by the batch (users and items in clean-table
// coordinates).
std::vector<std::size_t> touched_base_rows(const InteractionGraph& graph,
                                           const EmbeddingTable& base,
                                           const TrainingBatch& batch) {
    const std::size_t base_users = graph.num_users - (base.rows + 1 == graph.num_nodes() ? 1 : 0);
    std::set<std::size_t> rows;
    const auto add_user = [&](idx_t u) { rows.insert(u); };
    const auto add_item = [&](idx_t i) { rows.insert(base_users + i); };
    for (const auto& t : batch.rec) {
        add_user(t.user);
        add_item(t.pos_item);
        add_item(t.neg_item);
    }
    for (const auto& t : batch.trigger) {
        add_user(t.user);
        add_item(t.target_item);
        add_item(t.cand_item);
    }
    for (const auto& t : batch.limit) {
        add_user(t.user);
        add_item(t.cand_item);
        add_item(t.noncand_item);
    }
    return std::vector<std::size_t>(rows.begin(), rows.end());
}

struct ForwardPass {
    EmbeddingTable aug_base;
    PropagatedState state;
    EmbeddingTable final_emb;
    double norm_sq = 0.0;
    LossReport report;
};

ForwardPass run_forward(const InteractionGraph& graph, const NormalizedAdjacency& adj,
                        const EmbeddingTable& base, const TriggerGenerator* gen,
                        const TrainingBatch& batch, const LossWeights& weights, int num_layers,
                        AggregationMode agg) {
    ForwardPass fp;
    fp.aug_base = graph_base_table(graph, base, gen);
    fp.state = propagate(graph, adj, fp.aug_base, num_layers);
    fp.final_emb = aggregate(fp.state, agg);
    fp.norm_sq = batch_params_norm_sq(graph, base, gen, batch);

    const Scorer scores(fp.final_emb, graph);
    const double lt = batch.trigger.empty()
                          ? 0.0
                          : trigger_loss(batch.trigger, scores, weights.lambda_reg, fp.norm_sq);
    const double ll = batch.limit.empty()
                          ? 0.0
                          : limit_loss(batch.limit, scores, weights.lambda_reg, fp.norm_sq);
    const double lr =
        batch.rec.empty() ? 0.0 : bpr_loss(batch.rec, scores, weights.lambda_reg, fp.norm_sq);
    fp.report = joint_loss(lt, ll, lr, weights);
    return fp;
}

}  // namespace

double batch_params_norm_sq(const InteractionGraph& graph, const EmbeddingTable& base,
                            const TriggerGenerator* gen, const TrainingBatch& batch) {
    double norm = 0.0;
    for (std::size_t r : touched_base_rows(graph, base, batch)) {
        const auto row = base.row(r);
        for (double v : row) norm += v * v;
    }
    if (gen != nullptr) {
        for (double v : gen->w1) norm += v * v;
        for (double v : gen->b1) norm += v * v;
        for (double v : gen->w2) norm += v * v;
        for (double v : gen->b2) norm += v * v;
    }
    return norm;
}

LossReport evaluate_joint_loss(const InteractionGraph& graph, const NormalizedAdjacency& adj,
                               const EmbeddingTable& base, const TriggerGenerator* gen,
                               const TrainingBatch& batch, const LossWeights& weights,
                               int num_layers, AggregationMode agg) {
    return run_forward(graph, adj, base, gen, batch, weights, num_layers, agg).report;
}

void GradientTables::check_finite() const {
    for (double v : base.data)
        if (!std::isfinite(v)) throw InternalError("non-finite gradient in base_embeddings");
    const auto check = [](const std::vector<double>& block, const char* name) {
        for (double v : block)
            if (!std::isfinite(v)) throw InternalError(std::string("non-finite gradient in ") + name);
    };
    check(w1, "w1");
    check(b1, "b1");
    check(w2, "w2");
    check(b2, "b2");
}

GradientTables compute_gradients(const InteractionGraph& graph, const NormalizedAdjacency& adj,
                                 const EmbeddingTable& base, const TriggerGenerator* gen,
                                 const TrainingBatch& batch, const LossWeights& weights,
                                 int num_layers, AggregationMode agg, LossReport* report,
                                 EmbeddingTable* final_out) {
    const ForwardPass fp = run_forward(graph, adj, base, gen, batch, weights, num_layers, agg);
    if (report) *report = fp.report;
    if (final_out) *final_out = fp.final_emb;

    const std::size_t dim = base.dim;
    const idx_t num_users = graph.num_users;
    const EmbeddingTable& F = fp.final_emb;

    // Adjoint of the final embeddings from every pairwise term.
    EmbeddingTable dF(F.rows, dim);
    const auto accumulate = [&](idx_t user, idx_t pos_item, idx_t neg_item, double weight) {
        const std::size_t ur = user;
        const std::size_t pr = static_cast<std::size_t>(num_users) + pos_item;
        const std::size_t nr = static_cast<std::size_t>(num_users) + neg_item;
        const double x = dot(F.row(ur), F.row(pr)) - dot(F.row(ur), F.row(nr));
        const double g = -weight * logistic_sigmoid(-x);  // d softplus_neg(x)/dx = -sigma(-x)
        auto du = dF.row(ur);
        auto dp = dF.row(pr);
        auto dn = dF.row(nr);
        const auto fu = F.row(ur);
        const auto fpos = F.row(pr);
        const auto fneg = F.row(nr);
        for (std::size_t c = 0; c < dim; ++c) {
            du[c] += g * (fpos[c] - fneg[c]);
            dp[c] += g * fu[c];
            dn[c] -= g * fu[c];
        }
    };
    for (const auto& t : batch.trigger) accumulate(t.user, t.target_item, t.cand_item, weights.alpha);
    for (const auto& t : batch.limit) accumulate(t.user, t.cand_item, t.noncand_item, weights.beta);
    for (const auto& t : batch.rec) accumulate(t.user, t.pos_item, t.neg_item, weights.gamma);

    // Reverse through aggregation and the K propagation steps. The operator
    // is symmetric, so its transpose is one more propagation step.
    const std::size_t K = fp.state.layers.size() - 1;
    const std::size_t last_summed =
        (agg == AggregationMode::include_last || K == 0) ? K : K - 1;
    EmbeddingTable G(F.rows, dim);
    if (K >= 1) {
        if (last_summed == K) G = dF;
        for (std::size_t k = K; k >= 1; --k) {
            PropagatedState step = propagate(graph, adj, G, 1);
            G = std::move(step.layers[1]);
            if (k - 1 <= last_summed) {
                for (std::size_t n = 0; n < G.data.size(); ++n) G.data[n] += dF.data[n];
            }
        }
    } else {
        G = dF;
    }

    GradientTables grads;
    grads.base = EmbeddingTable(base.rows, dim);
    std::vector<double> d_fake;

    if (gen == nullptr) {
        grads.base.data = G.data;
    } else {
        const idx_t clean_users = num_users - 1;
        for (idx_t u = 0; u < clean_users; ++u) {
            const auto src = G.row(u);
            std::copy(src.begin(), src.end(), grads.base.row(u).begin());
        }
        const auto fake_adj = G.row(clean_users);
        d_fake.assign(fake_adj.begin(), fake_adj.end());
        for (idx_t i = 0; i < graph.num_items; ++i) {
            const auto src = G.row(item_row(graph, i));
            std::copy(src.begin(), src.end(),
                      grads.base.row(static_cast<std::size_t>(clean_users) + i).begin());
        }
    }

    // Regularization: each loss with terms adds lambda * ||Theta||^2, so the
    // total reg gradient scales with the sum of active loss weights.
    double reg_factor = 0.0;
    if (!batch.trigger.empty()) reg_factor += weights.alpha;
    if (!batch.limit.empty()) reg_factor += weights.beta;
    if (!batch.rec.empty()) reg_factor += weights.gamma;
    const double reg = 2.0 * weights.lambda_reg * reg_factor;
    if (reg != 0.0) {
        for (std::size_t r : touched_base_rows(graph, base, batch)) {
            auto g = grads.base.row(r);
            const auto p = base.row(r);
            for (std::size_t c = 0; c < dim; ++c) g[c] += reg * p[c];
        }
    }

    if (gen != nullptr) {
        grads.w1.assign(gen->w1.size(), 0.0);
        grads.b1.assign(gen->b1.size(), 0.0);
        grads.w2.assign(gen->w2.size(), 0.0);
        grads.b2.assign(gen->b2.size(), 0.0);

        // Recompute hidden activations; centroid is a held-fixed input.
        const idx_t H = gen->hidden;
        std::vector<double> z(H, 0.0);
        for (idx_t h = 0; h < H; ++h) {
            double a = gen->b1[h];
            for (idx_t c = 0; c < gen->dim; ++c) a += gen->centroid[c] * gen->w1[c * H + h];
            z[h] = logistic_sigmoid(a);
        }
        for (idx_t c = 0; c < gen->dim; ++c) grads.b2[c] += d_fake[c];
        std::vector<double> dz(H, 0.0);
        for (idx_t h = 0; h < H; ++h) {
            for (idx_t c = 0; c < gen->dim; ++c) {
                grads.w2[h * gen->dim + c] += z[h] * d_fake[c];
                dz[h] += d_fake[c] * gen->w2[h * gen->dim + c];
            }
        }
        for (idx_t h = 0; h < H; ++h) {
            const double da = dz[h] * z[h] * (1.0 - z[h]);
            grads.b1[h] += da;
            for (idx_t c = 0; c < gen->dim; ++c) grads.w1[c * H + h] += gen->centroid[c] * da;
        }
        if (reg != 0.0) {
            for (std::size_t n = 0; n < grads.w1.size(); ++n) grads.w1[n] += reg * gen->w1[n];
            for (std::size_t n = 0; n < grads.b1.size(); ++n) grads.b1[n] += reg * gen->b1[n];
            for (std::size_t n = 0; n < grads.w2.size(); ++n) grads.w2[n] += reg * gen->w2[n];
            for (std::size_t n = 0; n < grads.b2.size(); ++n) grads.b2[n] += reg * gen->b2[n];
        }
    }

    grads.check_finite();
    return grads;
}

TrainingBatch sample_batch(const InteractionGraph& graph, const AttackSpec* spec,
                           std::size_t batch_size, std::uint64_t seed) {
    TrainingBatch batch;
    Rng rng(seed);

    const std::size_t num_edges = graph.num_edges();
    if (num_edges > 0 && graph.num_items > 0) {
        batch.rec.reserve(batch_size);
        for (std::size_t n = 0; n < batch_size; ++n) {
            const std::size_t e = rng.next_below(num_edges);
            const auto it = std::upper_bound(graph.user_offsets.begin(), graph.user_offsets.end(),
                                             e);
            const idx_t u = static_cast<idx_t>(it - graph.user_offsets.begin() - 1);
            const idx_t i = graph.user_items[e];
            bool found = false;
            idx_t j = 0;
            for (int attempt = 0; attempt < 100; ++attempt) {
                j = static_cast<idx_t>(rng.next_below(graph.num_items));
                if (!graph.has_edge(u, j)) {
                    found = true;
                    break;
                }
            }
            if (found) batch.rec.push_back({u, i, j});
        }
    }

    if (spec != nullptr) {
        const auto negs = spec->candidate_negatives();
        if (negs.empty()) throw UserError("sample_batch: no negative candidates");
        if (spec->noncandidate_items.empty()) throw UserError("sample_batch: no noncandidate items");

        const std::size_t total = spec->target_users.size() * spec->target_items.size();
        std::vector<std::size_t> pair_ids(total);
        std::iota(pair_ids.begin(), pair_ids.end(), 0);
        std::size_t take = total;
        if (total > batch_size) {
            for (std::size_t k = 0; k < batch_size; ++k) {
                const std::size_t j = k + rng.next_below(total - k);
                std::swap(pair_ids[k], pair_ids[j]);
            }
            take = batch_size;
        }
        batch.trigger.reserve(take);
        batch.limit.reserve(take);
        for (std::size_t k = 0; k < take; ++k) {
            const std::size_t id = pair_ids[k];
            const idx_t t = spec->target_users[id / spec->target_items.size()];
            const idx_t s = spec->target_items[id % spec->target_items.size()];
            const idx_t p = negs[rng.next_below(negs.size())];
            batch.trigger.push_back({t, s, p});
            // One noncandidate negative per sampled candidate interaction.
            const idx_t n = spec->noncandidate_items[rng.next_below(spec->noncandidate_items.size())];
            batch.limit.push_back({t, p, n});
        }
    }

    batch.validate(spec);
    return batch;
}

AdamState AdamState::make(const EmbeddingTable& base, const TriggerGenerator* gen) {
    AdamState s;
    s.m_base = EmbeddingTable(base.rows, base.dim);
    s.v_base = EmbeddingTable(base.rows, base.dim);
    if (gen != nullptr) {
        s.m_w1.assign(gen->w1.size(), 0.0);
        s.v_w1.assign(gen->w1.size(), 0.0);
        s.m_b1.assign(gen->b1.size(), 0.0);
        s.v_b1.assign(gen->b1.size(), 0.0);
        s.m_w2.assign(gen->w2.size(), 0.0);
        s.v_w2.assign(gen->w2.size(), 0.0);
        s.m_b2.assign(gen->b2.size(), 0.0);
        s.v_b2.assign(gen->b2.size(), 0.0);
    }
    return s;
}

namespace {

void adam_update(std::span<double> params, std::span<const double> grads, std::vector<double>& m,
                 std::vector<double>& v, const AdamState& s, double lr) {
    const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    for (std::size_t n = 0; n < params.size(); ++n) {
        m[n] = s.beta1 * m[n] + (1.0 - s.beta1) * grads[n];
        v[n] = s.beta2 * v[n] + (1.0 - s.beta2) * grads[n] * grads[n];
        const double mhat = m[n] / bc1;
        const double vhat = v[n] / bc2;
        params[n] -= lr * mhat / (std::sqrt(vhat) + s.eps);
    }
}

}  // namespace

void optimizer_step(EmbeddingTable& base, TriggerGenerator* gen, const GradientTables& grads,
                    AdamState& state, double lr) {
    grads.check_finite();
    ++state.step;
    adam_update(std::span<double>(base.data), std::span<const double>(grads.base.data),
                state.m_base.data, state.v_base.data, state, lr);
    if (gen != nullptr && !grads.w1.empty()) {
        adam_update(gen->w1, grads.w1, state.m_w1, state.v_w1, state, lr);
        adam_update(gen->b1, grads.b1, state.m_b1, state.v_b1, state, lr);
        adam_update(gen->w2, grads.w2, state.m_w2, state.v_w2, state, lr);
        adam_update(gen->b2, grads.b2, state.m_b2, state.v_b2, state, lr);
    }
}

TrainResult train(const InteractionGraph& train_graph, const AttackSpec* spec,
                  const TrainConfig& config, const EmbeddingTable* initial_base) {
    config.weights.validate();
    // Three modes: plain BPR (no spec), the single-node generator attack
    // (spec on a clean graph), and joint-loss training on a graph whose
    // trigger structure is already injected (chain ablation).
    const bool with_trigger = spec != nullptr && train_graph.fake_users == 0;
    const bool joint_on_poisoned = spec != nullptr && train_graph.fake_users > 0;
    if (with_trigger) spec->validate(train_graph);
    if (joint_on_poisoned) {
        for (idx_t t : spec->target_users)
            if (t >= train_graph.num_real_users())
                throw UserError("train: target user outside the real user range");
        for (idx_t s : spec->target_items)
            if (s >= train_graph.num_real_items())
                throw UserError("train: target item outside the real item range");
    }

    TrainResult result;
    result.params = init_embeddings(train_graph.num_nodes(), config.dim, config.num_layers,
                                    config.seed);
    if (initial_base != nullptr) {
        if (initial_base->rows != train_graph.num_nodes() || initial_base->dim != config.dim)
            throw UserError("train: initial embedding table does not match graph/config");
        result.params.base = *initial_base;
    }

    InteractionGraph work_graph;
    NormalizedAdjacency work_adj;
    TriggerGenerator gen;
    if (with_trigger) {
        gen = init_trigger_generator(config.dim, config.dim, config.seed ^ 0x7472696767ULL);
        // Initial centroid from the clean graph's propagated state.
        const auto clean_adj = normalize(train_graph);
        const auto clean_state =
            propagate(train_graph, clean_adj, result.params.base, config.num_layers);
        const auto clean_final = aggregate(clean_state, config.aggregation);
        refresh_fake_user(gen, clean_final, train_graph, spec->target_items);

        work_graph = inject_trigger(train_graph, *spec);
        work_adj = normalize(work_graph);
    } else {
        work_graph = train_graph;
        work_adj = normalize(train_graph);
    }

    AdamState adam = AdamState::make(result.params.base, with_trigger ? &gen : nullptr);
    result.log.reserve(static_cast<std::size_t>(std::max(config.epochs, 0)));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::uint64_t epoch_seed =
            config.seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(epoch) + 2);
        const TrainingBatch batch = sample_batch(train_graph, spec, config.batch_size, epoch_seed);

        LossReport report;
        EmbeddingTable final_emb;
        const GradientTables grads = compute_gradients(
            work_graph, work_adj, result.params.base, with_trigger ? &gen : nullptr, batch,
            config.weights, config.num_layers, config.aggregation, &report, &final_emb);
        if (!std::isfinite(report.l_total))
            throw InternalError("train: non-finite loss at epoch " + std::to_string(epoch));

        optimizer_step(result.params.base, with_trigger ? &gen : nullptr, grads, adam, config.lr);

        if (with_trigger) {
            // Refresh the centroid from this epoch's propagated state, then
            // regenerate the fake row from the updated generator.
            refresh_fake_user(gen, final_emb, work_graph, spec->target_items);
        }

        const auto t1 = std::chrono::steady_clock::now();
        EpochLog entry;
        entry.epoch = epoch;
        entry.loss = report;
        entry.wall_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
        result.log.push_back(entry);
    }

    if (with_trigger) result.generator = std::move(gen);
    return result;
}

void write_training_log(const std::vector<EpochLog>& log, std::ostream& out) {
    out << "epoch\tl_trigger\tl_limit\tl_rec\tl_total\twall_ms\n";
    char buf[160];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof(buf), "%d\t%.10g\t%.10g\t%.10g\t%.10g\t%lld\n", e.epoch,
                      e.loss.l_trigger, e.loss.l_limit, e.loss.l_rec, e.loss.l_total,
                      static_cast<long long>(e.wall_ms));
        out << buf;
    }
}

std::vector<double> flatten_params(const EmbeddingTable& base, const TriggerGenerator* gen) {
    std::vector<double> flat = base.data;
    if (gen != nullptr) {
        flat.insert(flat.end(), gen->w1.begin(), gen->w1.end());
        flat.insert(flat.end(), gen->b1.begin(), gen->b1.end());
        flat.insert(flat.end(), gen->w2.begin(), gen->w2.end());
        flat.insert(flat.end(), gen->b2.begin(), gen->b2.end());
    }
    return flat;
}

void unflatten_params(const std::vector<double>& flat, EmbeddingTable& base,
                      TriggerGenerator* gen) {
    std::size_t off = base.data.size();
    std::copy(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(off), base.data.begin());
    if (gen != nullptr) {
        const auto take = [&](std::vector<double>& block) {
            std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                      flat.begin() + static_cast<std::ptrdiff_t>(off + block.size()),
                      block.begin());
            off += block.size();
        };
        take(gen->w1);
        take(gen->b1);
        take(gen->w2);
        take(gen->b2);
        gen->fake_user_embedding = generate_fake_user(*gen);
    }
    if (off != flat.size()) throw InternalError("unflatten_params: size mismatch");
}

std::vector<double> flatten_gradients(const GradientTables& grads, bool with_generator) {
    std::vector<double> flat = grads.base.data;
    if (with_generator) {
        flat.insert(flat.end(), grads.w1.begin(), grads.w1.end());
        flat.insert(flat.end(), grads.b1.begin(), grads.b1.end());
        flat.insert(flat.end(), grads.w2.begin(), grads.w2.end());
        flat.insert(flat.end(), grads.b2.begin(), grads.b2.end());
    }
    return flat;
}

}  // namespace recforge
