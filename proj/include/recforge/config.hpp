#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "recforge/graph.hpp"
#include "recforge/lightgcn.hpp"
#include "recforge/oracle.hpp"
#include "recforge/types.hpp"

namespace recforge {

// Resolved experiment configuration. Defaults follow the paper's reported
// parameter settings; everything is overridable from the flat key=value file.
struct ExperimentConfig {
    // dataset: a ratings file path, or "synthetic" with the spec below
    std::string dataset = "synthetic";
    oracle::SyntheticSpec synthetic;

    ThresholdMode threshold_mode = ThresholdMode::per_user_mean;
    double train_fraction = 0.8;

    idx_t dim = 64;
    int num_layers = 3;
    AggregationMode aggregation = AggregationMode::paper_literal;
    int epochs = 1000;
    double lr = 0.001;
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double lambda_reg = 1e-4;
    std::size_t batch_size = 2048;

    idx_t k_rec = 10;
    idx_t n_hit = 20;

    // target_items: a count (items picked by rule) or an explicit list
    idx_t target_item_count = 20;
    std::vector<idx_t> target_item_list;
    // target_users: "random:<count>" or an explicit list
    idx_t target_user_count = 20;
    std::vector<idx_t> target_user_list;

    std::string attack = "snt-ba";  // snt-ba | random | popular | vote | chain
    int chain_m = 0;
    double attack_fraction = 0.0;  // 0 = per-attack default
    std::string categories_file;   // item/user category metadata (optional)
    idx_t num_clusters = 10;       // k-means fallback for category derivation

    std::uint64_t seed = 42;

    double resolved_attack_fraction() const;
};

// Parse a flat "key = value" file; '#' starts a comment. Unknown keys are
// errors naming the key.
ExperimentConfig parse_config_text(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical dump of every resolved value, suitable for re-running.
std::string resolved_config_text(const ExperimentConfig& cfg);

// FNV-1a over the resolved text; names the output directory.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace recforge
