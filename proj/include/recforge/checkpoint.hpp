#pragma once

#include <filesystem>
#include <optional>

#include "recforge/lightgcn.hpp"
#include "recforge/trigger.hpp"
#include "recforge/types.hpp"

namespace recforge {

// Binary model file. Little-endian header: magic "GRFB", version u32,
// num_users u64, num_items u64, dim u32, num_layers u32, flags u32 (bit 0:
// fake user present). Body: base embeddings row-major float32, then the
// trigger generator when flagged.
struct Checkpoint {
    std::uint64_t num_users = 0;
    std::uint64_t num_items = 0;
    idx_t dim = 0;
    int num_layers = 0;
    EmbeddingTable base;
    std::optional<TriggerGenerator> generator;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace recforge
