#include "recforge/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "recforge/lightgcn.hpp"
#include "recforge/rng.hpp"

namespace recforge {

namespace {

PoisonResult apply_plan(const InteractionGraph& graph, PoisonPlan plan, idx_t new_items) {
    auto edges = graph.edges();
    for (const auto& fu : plan.fake_users)
        for (idx_t i : fu.items) edges.emplace_back(fu.user_index, i);
    const idx_t num_users = graph.num_users + static_cast<idx_t>(plan.fake_users.size());
    const idx_t num_items = graph.num_items + new_items;
    plan.fake_items = new_items;
    auto poisoned = InteractionGraph::from_edges(
        num_users, num_items, std::move(edges),
        graph.fake_users + static_cast<idx_t>(plan.fake_users.size()),
        graph.fake_items + new_items);
    return PoisonResult{std::move(poisoned), std::move(plan)};
}

}  // namespace

PoisonResult random_attack(const InteractionGraph& graph, const AttackSpec& spec, double fraction,
                           std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw UserError("random_attack: fraction must be in (0, 1]");
    const idx_t n_fake = static_cast<idx_t>(
        std::ceil(fraction * static_cast<double>(graph.num_real_users())));
    const idx_t filler = static_cast<idx_t>(std::ceil(
        static_cast<double>(graph.num_edges()) / static_cast<double>(graph.num_users)));

    Rng rng(seed);
    PoisonPlan plan;
    plan.label = "random";
    plan.seed = seed;
    const std::set<idx_t> target_set(spec.target_items.begin(), spec.target_items.end());
    for (idx_t f = 0; f < n_fake; ++f) {
        FakeUserPlan fu;
        fu.user_index = graph.num_users + f;
        fu.init_rule = "standard";
        std::set<idx_t> items(target_set);
        // Filler items keep fake users off the degree-outlier list.
        std::size_t guard = 0;
        while (items.size() < target_set.size() + filler &&
               items.size() < graph.num_items && guard < 100000) {
            items.insert(static_cast<idx_t>(rng.next_below(graph.num_items)));
            ++guard;
        }
        fu.items.assign(items.begin(), items.end());
        plan.fake_users.push_back(std::move(fu));
    }
    return apply_plan(graph, std::move(plan), 0);
}

PoisonResult popular_attack(const InteractionGraph& graph, const AttackSpec& spec,
                            double per_category_fraction,
                            const std::vector<std::string>& user_categories,
                            const EmbeddingTable& base, std::uint64_t seed) {
    if (user_categories.size() < graph.num_real_users())
        throw UserError("popular_attack: category labels missing for some users");
    if (base.rows != graph.num_nodes())
        throw UserError("popular_attack: embedding table does not match graph");

    std::map<std::string, std::vector<idx_t>> by_category;
    for (idx_t u = 0; u < graph.num_real_users(); ++u) by_category[user_categories[u]].push_back(u);
    if (by_category.empty()) throw UserError("popular_attack: no categories resolvable");

    PoisonPlan plan;
    plan.label = "popular";
    plan.seed = seed;
    idx_t next = graph.num_users;
    for (const auto& [cat, users] : by_category) {
        const idx_t n_fake = static_cast<idx_t>(
            std::ceil(per_category_fraction * static_cast<double>(users.size())));
        std::vector<double> centroid(base.dim, 0.0);
        for (idx_t u : users) {
            const auto row = base.row(user_row(u));
            for (std::size_t c = 0; c < base.dim; ++c) centroid[c] += row[c];
        }
        for (double& v : centroid) v /= static_cast<double>(users.size());
        for (idx_t f = 0; f < n_fake; ++f) {
            FakeUserPlan fu;
            fu.user_index = next++;
            fu.init_rule = "category_centroid:" + cat;
            fu.init_embedding = centroid;
            fu.items = spec.target_items;
            plan.fake_users.push_back(std::move(fu));
        }
    }
    return apply_plan(graph, std::move(plan), 0);
}

PoisonResult vote_attack(const InteractionGraph& graph, const AttackSpec& spec, double fraction,
                         const EmbeddingTable& base, std::uint64_t seed) {
    if (spec.target_users.empty()) throw UserError("vote_attack: empty target user set");
    if (base.rows != graph.num_nodes())
        throw UserError("vote_attack: embedding table does not match graph");
    const idx_t n_fake = static_cast<idx_t>(
        std::ceil(fraction * static_cast<double>(spec.target_users.size())));

    // Highest degree first, ties by ascending index.
    std::vector<idx_t> ranked = spec.target_users;
    std::sort(ranked.begin(), ranked.end(), [&graph](idx_t a, idx_t b) {
        const idx_t da = graph.user_degree(a);
        const idx_t db = graph.user_degree(b);
        if (da != db) return da > db;
        return a < b;
    });

    PoisonPlan plan;
    plan.label = "vote";
    plan.seed = seed;
    for (idx_t f = 0; f < n_fake && f < ranked.size(); ++f) {
        FakeUserPlan fu;
        fu.user_index = graph.num_users + f;
        fu.init_rule = "clone_user:" + std::to_string(ranked[f]);
        const auto src = base.row(user_row(ranked[f]));
        fu.init_embedding.assign(src.begin(), src.end());
        fu.items = spec.target_items;
        plan.fake_users.push_back(std::move(fu));
    }
    return apply_plan(graph, std::move(plan), 0);
}

PoisonResult multi_trigger_attack(const InteractionGraph& graph, const AttackSpec& spec,
                                  int chain_m, std::uint64_t seed) {
    if (chain_m < 0) throw UserError("multi_trigger_attack: chain length must be >= 0");

    PoisonPlan plan;
    plan.label = "chain-" + std::to_string(chain_m);
    plan.seed = seed;
    idx_t next_user = graph.num_users;
    idx_t next_item = graph.num_items;
    for (idx_t s : spec.target_items) {
        FakeUserPlan fu;
        fu.user_index = next_user++;
        fu.init_rule = "standard";
        fu.items.push_back(s);
        for (int m = 0; m < chain_m; ++m) fu.items.push_back(next_item++);
        std::sort(fu.items.begin(), fu.items.end());
        plan.fake_users.push_back(std::move(fu));
    }
    return apply_plan(graph, std::move(plan), next_item - graph.num_items);
}

EmbeddingTable initial_embeddings_for(const InteractionGraph& poisoned, const PoisonPlan& plan,
                                      idx_t dim, std::uint64_t seed) {
    ModelParams params = init_embeddings(poisoned.num_nodes(), dim, 0, seed);
    for (const auto& fu : plan.fake_users) {
        if (fu.init_embedding.empty()) continue;
        if (fu.init_embedding.size() != dim)
            throw InternalError("poison plan: init embedding dimension mismatch");
        std::copy(fu.init_embedding.begin(), fu.init_embedding.end(),
                  params.base.row(user_row(fu.user_index)).begin());
    }
    return std::move(params.base);
}

void write_poison_plan(const PoisonPlan& plan, std::ostream& out) {
    out << "# attack=" << plan.label << " seed=" << plan.seed
        << " fake_users=" << plan.fake_users.size() << " fake_items=" << plan.fake_items << "\n";
    for (const auto& fu : plan.fake_users) {
        out << fu.user_index << '\t' << fu.init_rule << '\t';
        for (std::size_t k = 0; k < fu.items.size(); ++k) {
            if (k > 0) out << ',';
            out << fu.items[k];
        }
        out << '\n';
    }
}

}  // namespace recforge
