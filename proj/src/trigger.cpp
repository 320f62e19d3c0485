#include "recforge/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <unordered_set>

#include "recforge/rng.hpp"

namespace recforge {

namespace {

double logistic(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

std::vector<idx_t> AttackSpec::candidate_negatives() const {
    std::vector<idx_t> out;
    std::set_difference(candidate_items.begin(), candidate_items.end(), target_items.begin(),
                        target_items.end(), std::back_inserter(out));
    return out;
}

void AttackSpec::validate(const InteractionGraph& clean_graph) const {
    if (target_users.empty()) throw UserError("attack spec: target user set is empty");
    if (target_items.empty()) throw UserError("attack spec: target item set is empty");
    if (!std::includes(candidate_items.begin(), candidate_items.end(), target_items.begin(),
                       target_items.end()))
        throw InternalError("attack spec: S not a subset of P");
    std::vector<idx_t> overlap;
    std::set_intersection(candidate_items.begin(), candidate_items.end(),
                          noncandidate_items.begin(), noncandidate_items.end(),
                          std::back_inserter(overlap));
    if (!overlap.empty()) throw InternalError("attack spec: N overlaps P");
    for (idx_t t : target_users)
        if (t >= clean_graph.num_users) throw UserError("attack spec: target user out of range");
    for (idx_t s : target_items)
        if (s >= clean_graph.num_items) throw UserError("attack spec: target item out of range");
    if (fake_user_index != clean_graph.num_users)
        throw InternalError("attack spec: fake user index must equal num_users of the clean graph");
}

TriggerGenerator init_trigger_generator(idx_t dim, idx_t hidden, std::uint64_t seed) {
    TriggerGenerator gen;
    gen.dim = dim;
    gen.hidden = hidden;
    gen.w1.resize(static_cast<std::size_t>(dim) * hidden);
    gen.b1.assign(hidden, 0.0);
    gen.w2.resize(static_cast<std::size_t>(hidden) * dim);
    gen.b2.assign(dim, 0.0);
    Rng rng(seed);
    for (double& v : gen.w1) v = rng.next_gaussian(0.0, 0.1);
    for (double& v : gen.w2) v = rng.next_gaussian(0.0, 0.1);
    gen.centroid.assign(dim, 0.0);
    gen.fake_user_embedding = generate_fake_user(gen);
    return gen;
}

std::vector<double> centroid_of(const EmbeddingTable& rows) {
    if (rows.rows == 0) throw UserError("centroid: empty target item set");
    std::vector<double> mean(rows.dim, 0.0);
    for (std::size_t r = 0; r < rows.rows; ++r) {
        const auto row = rows.row(r);
        for (std::size_t c = 0; c < rows.dim; ++c) mean[c] += row[c];
    }
    for (double& v : mean) v /= static_cast<double>(rows.rows);
    return mean;
}

std::vector<double> generate_fake_user(const TriggerGenerator& gen) {
    if (gen.centroid.size() != gen.dim) throw InternalError("trigger generator: stale centroid");
    std::vector<double> hidden(gen.hidden, 0.0);
    for (idx_t h = 0; h < gen.hidden; ++h) {
        double a = gen.b1[h];
        for (idx_t c = 0; c < gen.dim; ++c) a += gen.centroid[c] * gen.w1[c * gen.hidden + h];
        hidden[h] = logistic(a);
    }
    std::vector<double> out(gen.dim, 0.0);
    for (idx_t c = 0; c < gen.dim; ++c) {
        double v = gen.b2[c];
        for (idx_t h = 0; h < gen.hidden; ++h) v += hidden[h] * gen.w2[h * gen.dim + c];
        out[c] = v;
        if (!std::isfinite(v)) throw InternalError("trigger generator: non-finite fake embedding");
    }
    return out;
}

void refresh_fake_user(TriggerGenerator& gen, const EmbeddingTable& final_embeddings,
                       const InteractionGraph& graph, const std::vector<idx_t>& target_items) {
    EmbeddingTable rows(target_items.size(), final_embeddings.dim);
    for (std::size_t k = 0; k < target_items.size(); ++k) {
        const auto src = final_embeddings.row(item_row(graph, target_items[k]));
        std::copy(src.begin(), src.end(), rows.row(k).begin());
    }
    gen.centroid = centroid_of(rows);
    gen.fake_user_embedding = generate_fake_user(gen);
}

InteractionGraph inject_trigger(const InteractionGraph& graph, const AttackSpec& spec) {
    if (graph.fake_users != 0)
        throw UserError("inject_trigger: graph already carries a fake user");
    if (spec.target_items.empty()) throw UserError("inject_trigger: empty target item set");
    for (idx_t s : spec.target_items)
        if (s >= graph.num_items) throw UserError("inject_trigger: item index out of range");

    auto edges = graph.edges();
    const idx_t fake = graph.num_users;
    for (idx_t s : spec.target_items) edges.emplace_back(fake, s);
    return InteractionGraph::from_edges(graph.num_users + 1, graph.num_items, std::move(edges),
                                        /*fake_users=*/1, graph.fake_items);
}

InteractionGraph remove_trigger(const InteractionGraph& graph_with_trigger) {
    if (graph_with_trigger.fake_users != 1 || graph_with_trigger.fake_items != 0)
        throw UserError("remove_trigger: no single-node trigger present");
    const idx_t fake = graph_with_trigger.num_users - 1;
    std::vector<std::pair<idx_t, idx_t>> edges;
    edges.reserve(graph_with_trigger.num_edges());
    for (idx_t u = 0; u < fake; ++u)
        for (idx_t i : graph_with_trigger.items_of(u)) edges.emplace_back(u, i);
    return InteractionGraph::from_edges(fake, graph_with_trigger.num_items, std::move(edges));
}

std::vector<int> cluster_labels(const EmbeddingTable& rows, idx_t k, std::uint64_t seed) {
    if (rows.rows == 0) throw UserError("cluster_labels: no rows");
    k = std::min<idx_t>(k, static_cast<idx_t>(rows.rows));
    if (k == 0) throw UserError("cluster_labels: k must be >= 1");

    Rng rng(seed);
    // Distinct random rows as initial centroids.
    std::vector<std::size_t> centers;
    std::unordered_set<std::size_t> used;
    while (centers.size() < k) {
        const std::size_t c = rng.next_below(rows.rows);
        if (used.insert(c).second) centers.push_back(c);
    }
    EmbeddingTable centroids(k, rows.dim);
    for (idx_t c = 0; c < k; ++c) {
        const auto src = rows.row(centers[c]);
        std::copy(src.begin(), src.end(), centroids.row(c).begin());
    }

    std::vector<int> labels(rows.rows, 0);
    for (int iter = 0; iter < 50; ++iter) {
        bool changed = false;
        for (std::size_t r = 0; r < rows.rows; ++r) {
            const auto row = rows.row(r);
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (idx_t c = 0; c < k; ++c) {
                const auto cen = centroids.row(c);
                double d = 0.0;
                for (std::size_t j = 0; j < rows.dim; ++j) {
                    const double diff = row[j] - cen[j];
                    d += diff * diff;
                }
                if (d < best) {
                    best = d;
                    best_c = static_cast<int>(c);
                }
            }
            if (labels[r] != best_c) {
                labels[r] = best_c;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        EmbeddingTable sums(k, rows.dim);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t r = 0; r < rows.rows; ++r) {
            const auto row = rows.row(r);
            auto acc = sums.row(static_cast<std::size_t>(labels[r]));
            for (std::size_t j = 0; j < rows.dim; ++j) acc[j] += row[j];
            ++counts[static_cast<std::size_t>(labels[r])];
        }
        for (idx_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // keep the stale centroid
            auto cen = centroids.row(c);
            const auto sum = sums.row(c);
            for (std::size_t j = 0; j < rows.dim; ++j)
                cen[j] = sum[j] / static_cast<double>(counts[c]);
        }
    }
    return labels;
}

AttackSpec build_attack_spec(const InteractionGraph& graph, std::vector<idx_t> target_items,
                             const TargetUserRule& user_rule, const CategorySource& categories) {
    if (target_items.empty()) throw UserError("build_attack_spec: target item set is empty");
    std::sort(target_items.begin(), target_items.end());
    target_items.erase(std::unique(target_items.begin(), target_items.end()), target_items.end());

    AttackSpec spec;
    spec.target_items = std::move(target_items);
    spec.fake_user_index = graph.num_users;

    switch (user_rule.mode) {
        case TargetUserRule::Mode::explicit_list: {
            spec.target_users = user_rule.users;
            std::sort(spec.target_users.begin(), spec.target_users.end());
            spec.target_users.erase(
                std::unique(spec.target_users.begin(), spec.target_users.end()),
                spec.target_users.end());
            break;
        }
        case TargetUserRule::Mode::random_count: {
            if (user_rule.count == 0 || user_rule.count > graph.num_real_users())
                throw UserError("build_attack_spec: bad random target user count");
            Rng rng(user_rule.seed);
            std::set<idx_t> chosen;
            while (chosen.size() < user_rule.count)
                chosen.insert(static_cast<idx_t>(rng.next_below(graph.num_real_users())));
            spec.target_users.assign(chosen.begin(), chosen.end());
            break;
        }
    }
    if (spec.target_users.empty()) throw UserError("build_attack_spec: target user set is empty");

    // P: items sharing the category of S.
    std::set<idx_t> candidate_set(spec.target_items.begin(), spec.target_items.end());
    if (categories.item_categories.has_value()) {
        const auto& labels = *categories.item_categories;
        if (labels.size() < graph.num_real_items())
            throw UserError("build_attack_spec: category labels missing for some items");
        std::unordered_set<std::string> target_cats;
        for (idx_t s : spec.target_items) target_cats.insert(labels[s]);
        for (idx_t i = 0; i < graph.num_real_items(); ++i)
            if (target_cats.count(labels[i])) candidate_set.insert(i);
    } else if (categories.item_embeddings != nullptr) {
        const auto labels =
            cluster_labels(*categories.item_embeddings, categories.num_clusters, categories.seed);
        std::unordered_set<int> target_cats;
        for (idx_t s : spec.target_items) target_cats.insert(labels[s]);
        for (idx_t i = 0; i < graph.num_real_items() && i < labels.size(); ++i)
            if (target_cats.count(labels[i])) candidate_set.insert(i);
    } else {
        throw UserError("build_attack_spec: no category metadata and no embeddings to cluster");
    }
    spec.candidate_items.assign(candidate_set.begin(), candidate_set.end());
    if (spec.candidate_negatives().empty())
        throw UserError("build_attack_spec: no candidate items outside the target set");

    // N: items interacted by T outside P.
    std::set<idx_t> noncand;
    for (idx_t t : spec.target_users)
        for (idx_t i : graph.items_of(t))
            if (!candidate_set.count(i)) noncand.insert(i);
    spec.noncandidate_items.assign(noncand.begin(), noncand.end());
    if (spec.noncandidate_items.empty())
        throw UserError("build_attack_spec: no noncandidate items");

    spec.validate(graph);
    return spec;
}

void write_attack_spec(const AttackSpec& spec, std::ostream& out) {
    const auto section = [&out](const char* name, const std::vector<idx_t>& ids) {
        out << "[" << name << "]\n";
        for (idx_t v : ids) out << v << '\n';
    };
    section("T", spec.target_users);
    section("S", spec.target_items);
    section("P", spec.candidate_items);
    section("N", spec.noncandidate_items);
    out << "[fake_user]\n" << spec.fake_user_index << '\n';
}

}  // namespace recforge
