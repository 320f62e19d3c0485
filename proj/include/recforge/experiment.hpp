#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "recforge/attacks.hpp"
#include "recforge/config.hpp"
#include "recforge/graph.hpp"
#include "recforge/metrics.hpp"
#include "recforge/oracle.hpp"
#include "recforge/training.hpp"
#include "recforge/trigger.hpp"

namespace recforge {

struct DatasetBundle {
    InteractionGraph graph;
    std::optional<IdMapping> mapping;  // file datasets only
    std::vector<int> user_cluster;     // synthetic datasets only
    std::vector<int> item_cluster;
    IngestStats stats;
};

DatasetBundle load_dataset(const ExperimentConfig& cfg);

// Target item/user selection and category resolution per config. Needs the
// clean model's final embeddings for the clustering fallback.
AttackSpec build_spec_for(const ExperimentConfig& cfg, const InteractionGraph& train_graph,
                          const DatasetBundle& bundle, const EmbeddingTable& warm_final);

TrainConfig train_config_from(const ExperimentConfig& cfg, bool attack_losses);
EvalConfig eval_config_from(const ExperimentConfig& cfg);

// Clean-shaped table holding only the real-node rows of a poisoned model.
EmbeddingTable extract_real_rows(const InteractionGraph& poisoned, const EmbeddingTable& base,
                                 const InteractionGraph& clean);

struct ExperimentResult {
    MetricsReport report;
    std::filesystem::path out_dir;
};

// Full pipeline: ingest/generate, split, clean baseline, attack, evaluate,
// write artifacts under out_root/<config-hash>-s<seed>/.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_root, bool quiet,
                                std::ostream& log);

// Engine-vs-oracle agreement suites behind the `oracle-check` subcommand.
// Prints one line per suite; returns false if any disagrees.
bool run_oracle_checks(std::ostream& out);

}  // namespace recforge
