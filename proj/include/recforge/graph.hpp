#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "recforge/types.hpp"

namespace recforge {

// One parsed line of a ratings file.
struct RatingRecord {
    std::string user_id;
    std::string item_id;
    double rating = 0.0;
    std::optional<std::int64_t> timestamp;
};

enum class ThresholdMode { per_user_mean, global_mean };

// Bipartite user-item graph in CSR form, both directions. Users and items are
// dense indices; fake (injected) nodes, when present, occupy the tail of each
// index range so real nodes keep their original ids.
struct InteractionGraph {
    idx_t num_users = 0;
    idx_t num_items = 0;
    idx_t fake_users = 0;
    idx_t fake_items = 0;

    std::vector<std::size_t> user_offsets;  // num_users + 1
    std::vector<idx_t> user_items;          // strictly increasing per user
    std::vector<std::size_t> item_offsets;  // num_items + 1
    std::vector<idx_t> item_users;          // strictly increasing per item

    static InteractionGraph from_edges(idx_t num_users, idx_t num_items,
                                       std::vector<std::pair<idx_t, idx_t>> edges,
                                       idx_t fake_users = 0, idx_t fake_items = 0);

    std::size_t num_edges() const { return user_items.size(); }
    idx_t num_nodes() const { return num_users + num_items; }
    idx_t num_real_users() const { return num_users - fake_users; }
    idx_t num_real_items() const { return num_items - fake_items; }

    idx_t user_degree(idx_t u) const {
        return static_cast<idx_t>(user_offsets[u + 1] - user_offsets[u]);
    }
    idx_t item_degree(idx_t i) const {
        return static_cast<idx_t>(item_offsets[i + 1] - item_offsets[i]);
    }

    std::span<const idx_t> items_of(idx_t u) const {
        return std::span<const idx_t>(user_items.data() + user_offsets[u],
                                      user_offsets[u + 1] - user_offsets[u]);
    }
    std::span<const idx_t> users_of(idx_t i) const {
        return std::span<const idx_t>(item_users.data() + item_offsets[i],
                                      item_offsets[i + 1] - item_offsets[i]);
    }

    bool has_edge(idx_t u, idx_t i) const;

    // Edges in (user, item) order, sorted.
    std::vector<std::pair<idx_t, idx_t>> edges() const;

    // Throws InternalError if any structural invariant is broken.
    void validate() const;

    bool operator==(const InteractionGraph&) const = default;
};

// Per-edge weights 1/sqrt(d_u * d_i), stored for both traversal directions,
// aligned with the graph's CSR arrays.
struct NormalizedAdjacency {
    std::vector<double> user_edge_weights;  // aligned with user_items
    std::vector<double> item_edge_weights;  // aligned with item_users
};

// External id <-> dense index maps produced by ingest.
struct IdMapping {
    std::vector<std::string> user_ids;  // dense user index -> external id
    std::vector<std::string> item_ids;  // dense item index -> external id
};

struct IngestStats {
    std::size_t raw_records = 0;
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::size_t num_interactions = 0;
};

// Parse "user item rating [timestamp]" lines, tab- or comma-separated.
// Lines starting with '#' are skipped. Throws UserError with the line number
// on malformed input.
std::vector<RatingRecord> parse_ratings(std::istream& in);

// An edge survives iff its rating strictly exceeds the selected mean.
// Surviving external ids are remapped densely in first-seen order.
InteractionGraph ingest_ratings(const std::vector<RatingRecord>& records, ThresholdMode mode,
                                IdMapping* mapping = nullptr, IngestStats* stats = nullptr);

// Per-user stratified split: floor(train_fraction * degree) train edges,
// minimum 1 when the user has any edge; the rest go to test.
std::pair<InteractionGraph, std::vector<std::pair<idx_t, idx_t>>> split_train_test(
    const InteractionGraph& graph, double train_fraction, std::uint64_t seed);

NormalizedAdjacency normalize(const InteractionGraph& graph);

void write_edge_dump(const InteractionGraph& graph, std::ostream& out);
InteractionGraph read_edge_dump(std::istream& in);
void write_id_mapping(const IdMapping& mapping, std::ostream& out);

}  // namespace recforge
