#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace recforge {

using idx_t = std::uint32_t;

// Bad input, bad config, missing files. CLI maps this to exit code 1.
struct UserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Broken internal invariant. CLI maps this to exit code 2.
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

// Dense row-major table of reals; rows are node embeddings or MLP weights.
struct EmbeddingTable {
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::vector<double> data;

    EmbeddingTable() = default;
    EmbeddingTable(std::size_t r, std::size_t d) : rows(r), dim(d), data(r * d, 0.0) {}

    std::span<double> row(std::size_t r) {
        return std::span<double>(data.data() + r * dim, dim);
    }
    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(data.data() + r * dim, dim);
    }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    bool operator==(const EmbeddingTable&) const = default;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

}  // namespace recforge
