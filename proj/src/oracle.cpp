#include "recforge/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "recforge/rng.hpp"

namespace recforge::oracle {

std::vector<std::vector<std::vector<double>>> dense_propagate(const InteractionGraph& graph,
                                                              const EmbeddingTable& base, int K) {
    const std::size_t n = graph.num_nodes();
    if (n > 1000) throw UserError("dense_propagate: graph too large (cap 1000 nodes)");
    if (base.rows != n) throw UserError("dense_propagate: table does not match graph");
    const std::size_t dim = base.dim;
    const std::size_t U = graph.num_users;

    // Full symmetric normalized adjacency.
    std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
    for (idx_t u = 0; u < graph.num_users; ++u) {
        for (idx_t i : graph.items_of(u)) {
            const double w = 1.0 / std::sqrt(static_cast<double>(graph.user_degree(u)) *
                                             static_cast<double>(graph.item_degree(i)));
            A[u][U + i] = w;
            A[U + i][u] = w;
        }
    }

    std::vector<std::vector<std::vector<double>>> layers;
    layers.reserve(static_cast<std::size_t>(K) + 1);
    std::vector<std::vector<double>> cur(n, std::vector<double>(dim, 0.0));
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = base.row(r);
        std::copy(row.begin(), row.end(), cur[r].begin());
    }
    layers.push_back(cur);
    for (int k = 1; k <= K; ++k) {
        std::vector<std::vector<double>> next(n, std::vector<double>(dim, 0.0));
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t w = 0; w < n; ++w) {
                if (A[v][w] == 0.0) continue;
                for (std::size_t c = 0; c < dim; ++c) next[v][c] += A[v][w] * cur[w][c];
            }
        layers.push_back(next);
        cur = std::move(next);
    }
    return layers;
}

std::vector<std::vector<double>> dense_sum_layers(
    const std::vector<std::vector<std::vector<double>>>& layers, std::size_t last_layer) {
    if (layers.empty() || last_layer >= layers.size())
        throw UserError("dense_sum_layers: bad layer range");
    std::vector<std::vector<double>> out = layers[0];
    for (std::size_t k = 1; k <= last_layer; ++k)
        for (std::size_t r = 0; r < out.size(); ++r)
            for (std::size_t c = 0; c < out[r].size(); ++c) out[r][c] += layers[k][r][c];
    return out;
}

std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<double>& x, double step) {
    std::vector<double> grad(x.size(), 0.0);
    std::vector<double> probe = x;
    for (std::size_t n = 0; n < x.size(); ++n) {
        probe[n] = x[n] + step;
        const double up = f(probe);
        probe[n] = x[n] - step;
        const double down = f(probe);
        probe[n] = x[n];
        if (!std::isfinite(up) || !std::isfinite(down))
            throw InternalError("finite_diff_grad: non-finite loss at probe point");
        grad[n] = (up - down) / (2.0 * step);
    }
    return grad;
}

std::vector<std::vector<idx_t>> exhaustive_topk(
    const std::vector<std::vector<double>>& score_table,
    const std::vector<std::vector<bool>>& excluded, idx_t k) {
    std::vector<std::vector<idx_t>> lists;
    lists.reserve(score_table.size());
    for (std::size_t u = 0; u < score_table.size(); ++u) {
        std::vector<std::pair<double, idx_t>> scored;
        for (std::size_t i = 0; i < score_table[u].size(); ++i) {
            if (!excluded.empty() && excluded[u][i]) continue;
            scored.emplace_back(score_table[u][i], static_cast<idx_t>(i));
        }
        std::sort(scored.begin(), scored.end(),
                  [](const std::pair<double, idx_t>& a, const std::pair<double, idx_t>& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                  });
        if (scored.size() > k) scored.resize(k);
        std::vector<idx_t> items;
        items.reserve(scored.size());
        for (const auto& [s, i] : scored) items.push_back(i);
        lists.push_back(std::move(items));
    }
    return lists;
}

double exhaustive_acc(const std::vector<std::vector<idx_t>>& lists,
                      const std::vector<bool>& is_target_item, idx_t k) {
    std::size_t attacked = 0;
    for (const auto& list : lists) {
        bool hit = false;
        for (std::size_t r = 0; r < list.size() && r < k; ++r)
            if (is_target_item[list[r]]) hit = true;
        if (hit) ++attacked;
    }
    return static_cast<double>(attacked) / static_cast<double>(lists.size());
}

double exhaustive_cvr(const std::vector<std::vector<idx_t>>& lists,
                      const std::vector<bool>& is_target_item, idx_t k) {
    double sum = 0.0;
    for (const auto& list : lists) {
        std::size_t hits = 0;
        for (std::size_t r = 0; r < list.size() && r < k; ++r)
            if (is_target_item[list[r]]) ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(k);
    }
    return sum / static_cast<double>(lists.size());
}

double exhaustive_hr(const std::vector<std::vector<idx_t>>& lists,
                     const std::vector<std::vector<bool>>& is_test_item, idx_t n) {
    double sum = 0.0;
    std::size_t evaluable = 0;
    for (std::size_t u = 0; u < lists.size(); ++u) {
        bool has_test = false;
        for (bool b : is_test_item[u]) has_test = has_test || b;
        if (!has_test) continue;
        ++evaluable;
        std::size_t hits = 0;
        for (std::size_t r = 0; r < lists[u].size() && r < n; ++r)
            if (is_test_item[u][lists[u][r]]) ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(n);
    }
    return evaluable == 0 ? 0.0 : sum / static_cast<double>(evaluable);
}

SyntheticGraph generate_synthetic(const SyntheticSpec& spec) {
    if (!(spec.p_out >= 0.0 && spec.p_out < spec.p_in && spec.p_in <= 1.0))
        throw UserError("generate_synthetic: need 0 <= p_out < p_in <= 1");
    if (spec.users_per_cluster == 0 || spec.items_per_cluster == 0 || spec.num_clusters == 0)
        throw UserError("generate_synthetic: degenerate spec");

    const idx_t U = spec.users_per_cluster * spec.num_clusters;
    const idx_t I = spec.items_per_cluster * spec.num_clusters;
    Rng rng(spec.seed);

    std::vector<std::vector<bool>> edge(U, std::vector<bool>(I, false));
    const auto roll_user_row = [&](idx_t u) {
        const int cu = static_cast<int>(u / spec.users_per_cluster);
        for (idx_t i = 0; i < I; ++i) {
            const int ci = static_cast<int>(i / spec.items_per_cluster);
            const double p = (cu == ci) ? spec.p_in : spec.p_out;
            edge[u][i] = rng.next_unit() < p;
        }
    };
    for (idx_t u = 0; u < U; ++u) roll_user_row(u);

    // Re-roll zero-degree users once, then zero-degree items once.
    for (idx_t u = 0; u < U; ++u) {
        bool any = false;
        for (idx_t i = 0; i < I; ++i) any = any || edge[u][i];
        if (!any) roll_user_row(u);
    }
    for (idx_t i = 0; i < I; ++i) {
        bool any = false;
        for (idx_t u = 0; u < U; ++u) any = any || edge[u][i];
        if (any) continue;
        const int ci = static_cast<int>(i / spec.items_per_cluster);
        for (idx_t u = 0; u < U; ++u) {
            const int cu = static_cast<int>(u / spec.users_per_cluster);
            const double p = (cu == ci) ? spec.p_in : spec.p_out;
            edge[u][i] = rng.next_unit() < p;
        }
    }

    // Drop nodes that are still isolated, compacting indices.
    std::vector<idx_t> user_map(U, UINT32_MAX);
    std::vector<idx_t> item_map(I, UINT32_MAX);
    SyntheticGraph out;
    idx_t nu = 0;
    for (idx_t u = 0; u < U; ++u) {
        bool any = false;
        for (idx_t i = 0; i < I; ++i) any = any || edge[u][i];
        if (!any) continue;
        user_map[u] = nu++;
        out.user_cluster.push_back(static_cast<int>(u / spec.users_per_cluster));
    }
    idx_t ni = 0;
    for (idx_t i = 0; i < I; ++i) {
        bool any = false;
        for (idx_t u = 0; u < U; ++u) any = any || edge[u][i];
        if (!any) continue;
        item_map[i] = ni++;
        out.item_cluster.push_back(static_cast<int>(i / spec.items_per_cluster));
    }
    if (nu == 0 || ni == 0) throw UserError("generate_synthetic: spec produced an empty graph");

    std::vector<std::pair<idx_t, idx_t>> edges;
    for (idx_t u = 0; u < U; ++u) {
        if (user_map[u] == UINT32_MAX) continue;
        for (idx_t i = 0; i < I; ++i)
            if (edge[u][i] && item_map[i] != UINT32_MAX)
                edges.emplace_back(user_map[u], item_map[i]);
    }
    out.graph = InteractionGraph::from_edges(nu, ni, std::move(edges));
    return out;
}

void write_cluster_labels(const SyntheticGraph& synth, std::ostream& out) {
    for (std::size_t u = 0; u < synth.user_cluster.size(); ++u)
        out << 'u' << u << '\t' << synth.user_cluster[u] << '\n';
    for (std::size_t i = 0; i < synth.item_cluster.size(); ++i)
        out << 'i' << i << '\t' << synth.item_cluster[i] << '\n';
}

}  // namespace recforge::oracle
