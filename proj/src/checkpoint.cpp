#include "recforge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace recforge {

namespace {

constexpr char kMagic[4] = {'G', 'R', 'F', 'B'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw UserError("checkpoint: truncated file");
    return v;
}

void put_f32_block(std::ostream& out, const std::vector<double>& values) {
    for (double v : values) put(out, static_cast<float>(v));
}

void get_f32_block(std::istream& in, std::vector<double>& values, std::size_t count) {
    values.resize(count);
    for (std::size_t n = 0; n < count; ++n) values[n] = static_cast<double>(get<float>(in));
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UserError("cannot open checkpoint file for writing: " + path.string());

    out.write(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, ckpt.num_users);
    put<std::uint64_t>(out, ckpt.num_items);
    put<std::uint32_t>(out, ckpt.dim);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.num_layers));
    const std::uint32_t flags = ckpt.generator.has_value() ? 1u : 0u;
    put<std::uint32_t>(out, flags);

    if (ckpt.base.rows != ckpt.num_users + ckpt.num_items || ckpt.base.dim != ckpt.dim)
        throw InternalError("checkpoint: base table shape does not match header");
    put_f32_block(out, ckpt.base.data);

    if (ckpt.generator.has_value()) {
        const auto& gen = *ckpt.generator;
        put<std::uint32_t>(out, gen.hidden);
        put_f32_block(out, gen.w1);
        put_f32_block(out, gen.b1);
        put_f32_block(out, gen.w2);
        put_f32_block(out, gen.b2);
        put_f32_block(out, gen.centroid);
        put_f32_block(out, gen.fake_user_embedding);
    }
    if (!out) throw UserError("checkpoint: write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UserError("cannot open checkpoint file: " + path.string());

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw UserError("checkpoint: bad magic bytes (not a GRFB file)");
    const auto version = get<std::uint32_t>(in);
    if (version != kVersion)
        throw UserError("checkpoint: unsupported format version " + std::to_string(version));

    Checkpoint ckpt;
    ckpt.num_users = get<std::uint64_t>(in);
    ckpt.num_items = get<std::uint64_t>(in);
    ckpt.dim = get<std::uint32_t>(in);
    ckpt.num_layers = static_cast<int>(get<std::uint32_t>(in));
    const auto flags = get<std::uint32_t>(in);

    ckpt.base = EmbeddingTable(ckpt.num_users + ckpt.num_items, ckpt.dim);
    get_f32_block(in, ckpt.base.data, ckpt.base.rows * ckpt.base.dim);

    if (flags & 1u) {
        TriggerGenerator gen;
        gen.dim = ckpt.dim;
        gen.hidden = get<std::uint32_t>(in);
        get_f32_block(in, gen.w1, static_cast<std::size_t>(gen.dim) * gen.hidden);
        get_f32_block(in, gen.b1, gen.hidden);
        get_f32_block(in, gen.w2, static_cast<std::size_t>(gen.hidden) * gen.dim);
        get_f32_block(in, gen.b2, gen.dim);
        get_f32_block(in, gen.centroid, gen.dim);
        get_f32_block(in, gen.fake_user_embedding, gen.dim);
        ckpt.generator = std::move(gen);
    }
    return ckpt;
}

}  // namespace recforge
