#include "recforge/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "recforge/rng.hpp"

namespace recforge {

InteractionGraph InteractionGraph::from_edges(idx_t num_users, idx_t num_items,
                                              std::vector<std::pair<idx_t, idx_t>> edges,
                                              idx_t fake_users, idx_t fake_items) {
    InteractionGraph g;
    g.num_users = num_users;
    g.num_items = num_items;
    g.fake_users = fake_users;
    g.fake_items = fake_items;

    std::sort(edges.begin(), edges.end());
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
        if (edges[e] == edges[e + 1]) {
            throw InternalError("duplicate edge (" + std::to_string(edges[e].first) + ", " +
                                std::to_string(edges[e].second) + ")");
        }
    }

    g.user_offsets.assign(num_users + 1, 0);
    g.item_offsets.assign(num_items + 1, 0);
    for (const auto& [u, i] : edges) {
        if (u >= num_users || i >= num_items) {
            throw InternalError("edge (" + std::to_string(u) + ", " + std::to_string(i) +
                                ") outside graph bounds");
        }
        ++g.user_offsets[u + 1];
        ++g.item_offsets[i + 1];
    }
    for (idx_t u = 0; u < num_users; ++u) g.user_offsets[u + 1] += g.user_offsets[u];
    for (idx_t i = 0; i < num_items; ++i) g.item_offsets[i + 1] += g.item_offsets[i];

    g.user_items.resize(edges.size());
    g.item_users.resize(edges.size());
    std::vector<std::size_t> ucur(g.user_offsets.begin(), g.user_offsets.end() - 1);
    std::vector<std::size_t> icur(g.item_offsets.begin(), g.item_offsets.end() - 1);
    for (const auto& [u, i] : edges) {
        g.user_items[ucur[u]++] = i;
        g.item_users[icur[i]++] = u;
    }
    return g;
}

bool InteractionGraph::has_edge(idx_t u, idx_t i) const {
    const auto items = items_of(u);
    return std::binary_search(items.begin(), items.end(), i);
}

std::vector<std::pair<idx_t, idx_t>> InteractionGraph::edges() const {
    std::vector<std::pair<idx_t, idx_t>> out;
    out.reserve(num_edges());
    for (idx_t u = 0; u < num_users; ++u)
        for (idx_t i : items_of(u)) out.emplace_back(u, i);
    return out;
}

void InteractionGraph::validate() const {
    if (user_offsets.size() != num_users + 1u || item_offsets.size() != num_items + 1u)
        throw InternalError("graph: offset array size mismatch");
    if (user_items.size() != item_users.size())
        throw InternalError("graph: user/item edge counts differ");
    if (fake_users > num_users || fake_items > num_items)
        throw InternalError("graph: fake counts exceed node counts");

    std::size_t user_degree_sum = 0;
    for (idx_t u = 0; u < num_users; ++u) {
        const auto items = items_of(u);
        user_degree_sum += items.size();
        for (std::size_t k = 0; k < items.size(); ++k) {
            if (items[k] >= num_items) throw InternalError("graph: item index out of range");
            if (k > 0 && items[k] <= items[k - 1])
                throw InternalError("graph: user adjacency not strictly increasing");
        }
    }
    if (user_degree_sum != user_items.size()) throw InternalError("graph: offsets inconsistent");

    std::size_t item_degree_sum = 0;
    for (idx_t i = 0; i < num_items; ++i) {
        const auto users = users_of(i);
        item_degree_sum += users.size();
        for (std::size_t k = 0; k < users.size(); ++k) {
            if (users[k] >= num_users) throw InternalError("graph: user index out of range");
            if (k > 0 && users[k] <= users[k - 1])
                throw InternalError("graph: item adjacency not strictly increasing");
        }
    }
    if (item_degree_sum != user_degree_sum)
        throw InternalError("graph: adjacency directions describe different edge sets");

    for (idx_t i = 0; i < num_items; ++i)
        for (idx_t u : users_of(i))
            if (!has_edge(u, i)) throw InternalError("graph: directions disagree on an edge");
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    const char sep = line.find('\t') != std::string::npos ? '\t' : ',';
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    for (auto& f : fields) {
        while (!f.empty() && (f.front() == ' ')) f.erase(f.begin());
        while (!f.empty() && (f.back() == ' ' || f.back() == '\r')) f.pop_back();
    }
    return fields;
}

}  // namespace

std::vector<RatingRecord> parse_ratings(std::istream& in) {
    std::vector<RatingRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_fields(line);
        if (fields.size() < 3 || fields.size() > 4)
            throw UserError("line " + std::to_string(line_no) + ": expected 3 or 4 fields, got " +
                            std::to_string(fields.size()));
        RatingRecord rec;
        rec.user_id = fields[0];
        rec.item_id = fields[1];
        if (rec.user_id.empty() || rec.item_id.empty())
            throw UserError("line " + std::to_string(line_no) + ": empty identifier");
        try {
            std::size_t pos = 0;
            rec.rating = std::stod(fields[2], &pos);
            if (pos != fields[2].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw UserError("line " + std::to_string(line_no) + ": unparsable rating '" +
                            fields[2] + "'");
        }
        if (!std::isfinite(rec.rating))
            throw UserError("line " + std::to_string(line_no) + ": non-finite rating");
        if (fields.size() == 4 && !fields[3].empty()) {
            std::int64_t ts = 0;
            const auto* first = fields[3].data();
            const auto* last = first + fields[3].size();
            auto [p, ec] = std::from_chars(first, last, ts);
            if (ec != std::errc() || p != last)
                throw UserError("line " + std::to_string(line_no) + ": unparsable timestamp '" +
                                fields[3] + "'");
            rec.timestamp = ts;
        }
        records.push_back(std::move(rec));
    }
    return records;
}

InteractionGraph ingest_ratings(const std::vector<RatingRecord>& records, ThresholdMode mode,
                                IdMapping* mapping, IngestStats* stats) {
    if (records.empty()) throw UserError("no interactions");

    // Means are computed over all ratings of the grouping unit, then an edge
    // survives iff its rating strictly exceeds that mean.
    std::unordered_map<std::string, std::pair<double, std::size_t>> user_sums;
    double global_sum = 0.0;
    for (const auto& r : records) {
        auto& [sum, count] = user_sums[r.user_id];
        sum += r.rating;
        ++count;
        global_sum += r.rating;
    }
    const double global_mean = global_sum / static_cast<double>(records.size());

    std::unordered_map<std::string, idx_t> user_index;
    std::unordered_map<std::string, idx_t> item_index;
    IdMapping map;
    std::vector<std::pair<idx_t, idx_t>> edges;
    for (const auto& r : records) {
        double mean = global_mean;
        if (mode == ThresholdMode::per_user_mean) {
            const auto& [sum, count] = user_sums[r.user_id];
            mean = sum / static_cast<double>(count);
        }
        if (!(r.rating > mean)) continue;

        auto [uit, unew] = user_index.try_emplace(r.user_id, static_cast<idx_t>(map.user_ids.size()));
        if (unew) map.user_ids.push_back(r.user_id);
        auto [iit, inew] = item_index.try_emplace(r.item_id, static_cast<idx_t>(map.item_ids.size()));
        if (inew) map.item_ids.push_back(r.item_id);
        edges.emplace_back(uit->second, iit->second);
    }
    if (edges.empty()) throw UserError("no interactions");

    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    auto graph = InteractionGraph::from_edges(static_cast<idx_t>(map.user_ids.size()),
                                              static_cast<idx_t>(map.item_ids.size()),
                                              std::move(edges));
    if (stats) {
        stats->raw_records = records.size();
        stats->num_users = graph.num_users;
        stats->num_items = graph.num_items;
        stats->num_interactions = graph.num_edges();
    }
    if (mapping) *mapping = std::move(map);
    return graph;
}

std::pair<InteractionGraph, std::vector<std::pair<idx_t, idx_t>>> split_train_test(
    const InteractionGraph& graph, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw UserError("train_fraction must be in (0, 1)");

    std::vector<std::pair<idx_t, idx_t>> train_edges;
    std::vector<std::pair<idx_t, idx_t>> test_edges;
    train_edges.reserve(graph.num_edges());

    for (idx_t u = 0; u < graph.num_users; ++u) {
        const auto items = graph.items_of(u);
        const idx_t d = static_cast<idx_t>(items.size());
        if (d == 0) continue;
        idx_t n_train = static_cast<idx_t>(std::floor(train_fraction * static_cast<double>(d)));
        n_train = std::max<idx_t>(n_train, 1);
        n_train = std::min<idx_t>(n_train, d);

        // Per-user substream so the split is independent of iteration order.
        Rng rng = Rng::fork(seed, u);
        std::vector<idx_t> perm(items.begin(), items.end());
        for (idx_t k = d; k > 1; --k) {
            const idx_t j = static_cast<idx_t>(rng.next_below(k));
            std::swap(perm[k - 1], perm[j]);
        }
        for (idx_t k = 0; k < d; ++k) {
            if (k < n_train)
                train_edges.emplace_back(u, perm[k]);
            else
                test_edges.emplace_back(u, perm[k]);
        }
    }
    std::sort(test_edges.begin(), test_edges.end());
    auto train = InteractionGraph::from_edges(graph.num_users, graph.num_items,
                                              std::move(train_edges), graph.fake_users,
                                              graph.fake_items);
    return {std::move(train), std::move(test_edges)};
}

NormalizedAdjacency normalize(const InteractionGraph& graph) {
    NormalizedAdjacency adj;
    adj.user_edge_weights.resize(graph.num_edges());
    adj.item_edge_weights.resize(graph.num_edges());
    for (idx_t u = 0; u < graph.num_users; ++u) {
        const double du = static_cast<double>(graph.user_degree(u));
        for (std::size_t e = graph.user_offsets[u]; e < graph.user_offsets[u + 1]; ++e) {
            const idx_t i = graph.user_items[e];
            const double di = static_cast<double>(graph.item_degree(i));
            if (du == 0.0 || di == 0.0)
                throw InternalError("normalize: zero-degree node referenced by an edge");
            adj.user_edge_weights[e] = 1.0 / std::sqrt(du * di);
        }
    }
    for (idx_t i = 0; i < graph.num_items; ++i) {
        const double di = static_cast<double>(graph.item_degree(i));
        for (std::size_t e = graph.item_offsets[i]; e < graph.item_offsets[i + 1]; ++e) {
            const idx_t u = graph.item_users[e];
            const double du = static_cast<double>(graph.user_degree(u));
            adj.item_edge_weights[e] = 1.0 / std::sqrt(du * di);
        }
    }
    return adj;
}

void write_edge_dump(const InteractionGraph& graph, std::ostream& out) {
    out << "# users=" << graph.num_users << " items=" << graph.num_items << "\n";
    for (idx_t u = 0; u < graph.num_users; ++u)
        for (idx_t i : graph.items_of(u)) out << u << '\t' << i << '\n';
}

InteractionGraph read_edge_dump(std::istream& in) {
    std::vector<std::pair<idx_t, idx_t>> edges;
    idx_t num_users = 0;
    idx_t num_items = 0;
    bool have_header = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            unsigned long long u = 0, i = 0;
            if (std::sscanf(line.c_str(), "# users=%llu items=%llu", &u, &i) == 2) {
                num_users = static_cast<idx_t>(u);
                num_items = static_cast<idx_t>(i);
                have_header = true;
            }
            continue;
        }
        std::istringstream ls(line);
        unsigned long long u = 0, i = 0;
        if (!(ls >> u >> i))
            throw UserError("edge dump line " + std::to_string(line_no) + ": expected 'u<TAB>i'");
        edges.emplace_back(static_cast<idx_t>(u), static_cast<idx_t>(i));
    }
    if (edges.empty()) throw UserError("no interactions");
    if (!have_header) {
        for (const auto& [u, i] : edges) {
            num_users = std::max(num_users, u + 1);
            num_items = std::max(num_items, i + 1);
        }
    }
    return InteractionGraph::from_edges(num_users, num_items, std::move(edges));
}

void write_id_mapping(const IdMapping& mapping, std::ostream& out) {
    out << "# users\n";
    for (std::size_t u = 0; u < mapping.user_ids.size(); ++u)
        out << mapping.user_ids[u] << '\t' << u << '\n';
    out << "# items\n";
    for (std::size_t i = 0; i < mapping.item_ids.size(); ++i)
        out << mapping.item_ids[i] << '\t' << i << '\n';
}

}  // namespace recforge
