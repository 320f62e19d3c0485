// recforge: graph-recommender attack workbench CLI.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "recforge/attacks.hpp"
#include "recforge/checkpoint.hpp"
#include "recforge/config.hpp"
#include "recforge/experiment.hpp"
#include "recforge/graph.hpp"
#include "recforge/metrics.hpp"
#include "recforge/oracle.hpp"
#include "recforge/training.hpp"

namespace fs = std::filesystem;
using namespace recforge;

namespace {

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir = "out";
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config file (key = value)");
    cmd->add_option("--seed", opts.seed, "seed override")->each([&opts](const std::string&) {
        opts.seed_set = true;
    });
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_flag("--quiet", opts.quiet, "suppress progress output");
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
    ExperimentConfig cfg;
    if (!opts.config_path.empty()) cfg = load_config(opts.config_path);
    if (opts.seed_set) cfg.seed = opts.seed;
    return cfg;
}

int cmd_ingest(const CommonOpts& opts, const std::string& input) {
    std::ifstream in(input);
    if (!in) throw UserError("cannot open ratings file: " + input);
    const auto records = parse_ratings(in);
    const ExperimentConfig cfg = resolve_config(opts);
    IdMapping mapping;
    IngestStats stats;
    const auto graph = ingest_ratings(records, cfg.threshold_mode, &mapping, &stats);

    fs::create_directories(opts.out_dir);
    {
        std::ofstream out(fs::path(opts.out_dir) / "graph.edges");
        write_edge_dump(graph, out);
        std::ofstream map_out(fs::path(opts.out_dir) / "idmap.tsv");
        write_id_mapping(mapping, map_out);
    }
    std::cout << "users = " << stats.num_users << "\n"
              << "items = " << stats.num_items << "\n"
              << "interactions = " << stats.num_interactions << "\n";
    return 0;
}

int cmd_train(const CommonOpts& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const DatasetBundle bundle = load_dataset(cfg);
    auto [train_graph, test_edges] = split_train_test(bundle.graph, cfg.train_fraction, cfg.seed);

    const TrainConfig tc = train_config_from(cfg, /*attack_losses=*/false);
    if (!opts.quiet) std::cout << "training clean model (" << tc.epochs << " epochs)\n";
    const TrainResult result = train(train_graph, nullptr, tc);

    fs::create_directories(opts.out_dir);
    save_checkpoint(Checkpoint{train_graph.num_users, train_graph.num_items, cfg.dim,
                               cfg.num_layers, result.params.base, std::nullopt},
                    fs::path(opts.out_dir) / "clean_model.grfb");
    {
        std::ofstream out(fs::path(opts.out_dir) / "clean_train_log.tsv");
        write_training_log(result.log, out);
        std::ofstream edges(fs::path(opts.out_dir) / "train.edges");
        write_edge_dump(train_graph, edges);
        std::ofstream test_out(fs::path(opts.out_dir) / "test.edges");
        for (const auto& [u, i] : test_edges) test_out << u << '\t' << i << '\n';
    }
    if (!opts.quiet) std::cout << "wrote " << opts.out_dir << "/clean_model.grfb\n";
    return 0;
}

int cmd_run(const CommonOpts& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const auto result = run_experiment(cfg, opts.out_dir, opts.quiet, std::cout);
    std::cout << "report: " << (result.out_dir / "metrics.txt").string() << "\n";
    return 0;
}

int cmd_attack(const CommonOpts& opts, const std::string& checkpoint_path) {
    // Runs the configured attack against the dataset, starting from the
    // provided clean checkpoint for warm embeddings.
    const ExperimentConfig cfg = resolve_config(opts);
    const DatasetBundle bundle = load_dataset(cfg);
    auto [train_graph, test_edges] = split_train_test(bundle.graph, cfg.train_fraction, cfg.seed);
    const Checkpoint warm = load_checkpoint(checkpoint_path);
    if (warm.base.rows != train_graph.num_nodes())
        throw UserError("attack: checkpoint does not match the dataset/split");

    const auto adj = normalize(train_graph);
    const auto warm_final =
        aggregate(propagate(train_graph, adj, warm.base, cfg.num_layers), cfg.aggregation);
    const AttackSpec spec = build_spec_for(cfg, train_graph, bundle, warm_final);

    fs::create_directories(opts.out_dir);
    {
        std::ofstream out(fs::path(opts.out_dir) / "attack_spec.txt");
        write_attack_spec(spec, out);
    }

    if (cfg.attack == "snt-ba") {
        const TrainConfig tc = train_config_from(cfg, /*attack_losses=*/true);
        if (!opts.quiet) std::cout << "training snt-ba (" << tc.epochs << " epochs)\n";
        TrainResult result = train(train_graph, &spec, tc);
        save_checkpoint(Checkpoint{train_graph.num_users, train_graph.num_items, cfg.dim,
                                   cfg.num_layers, result.params.base, result.generator},
                        fs::path(opts.out_dir) / "model.grfb");
        std::ofstream out(fs::path(opts.out_dir) / "train_log.tsv");
        write_training_log(result.log, out);
    } else {
        const double fraction = cfg.resolved_attack_fraction();
        PoisonResult poison = [&]() {
            if (cfg.attack == "random")
                return random_attack(train_graph, spec, fraction, cfg.seed);
            if (cfg.attack == "vote")
                return vote_attack(train_graph, spec, fraction, warm.base, cfg.seed);
            if (cfg.attack == "chain")
                return multi_trigger_attack(train_graph, spec, cfg.chain_m, cfg.seed);
            if (cfg.attack == "popular") {
                std::vector<std::string> user_cats;
                if (!bundle.user_cluster.empty()) {
                    for (int c : bundle.user_cluster) user_cats.push_back("c" + std::to_string(c));
                } else {
                    EmbeddingTable users(train_graph.num_users, warm_final.dim);
                    for (idx_t u = 0; u < train_graph.num_users; ++u) {
                        const auto src = warm_final.row(user_row(u));
                        std::copy(src.begin(), src.end(), users.row(u).begin());
                    }
                    for (int c : cluster_labels(users, cfg.num_clusters, cfg.seed))
                        user_cats.push_back("c" + std::to_string(c));
                }
                return popular_attack(train_graph, spec, fraction, user_cats, warm.base, cfg.seed);
            }
            throw UserError("unknown attack '" + cfg.attack + "'");
        }();
        std::ofstream plan_out(fs::path(opts.out_dir) / "poison_plan.txt");
        write_poison_plan(poison.plan, plan_out);
        std::ofstream graph_out(fs::path(opts.out_dir) / "poisoned.edges");
        write_edge_dump(poison.graph, graph_out);
        const EmbeddingTable init =
            initial_embeddings_for(poison.graph, poison.plan, cfg.dim, cfg.seed);
        const TrainConfig tc = train_config_from(cfg, /*attack_losses=*/false);
        if (!opts.quiet) std::cout << "retraining on poisoned graph\n";
        TrainResult result = train(poison.graph, nullptr, tc, &init);
        save_checkpoint(Checkpoint{poison.graph.num_users, poison.graph.num_items, cfg.dim,
                                   cfg.num_layers, result.params.base, std::nullopt},
                        fs::path(opts.out_dir) / "model.grfb");
        std::ofstream out(fs::path(opts.out_dir) / "train_log.tsv");
        write_training_log(result.log, out);
    }
    if (!opts.quiet) std::cout << "wrote " << opts.out_dir << "/model.grfb\n";
    return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& checkpoint_path,
                 const std::string& clean_checkpoint_path) {
    const ExperimentConfig cfg = resolve_config(opts);
    const DatasetBundle bundle = load_dataset(cfg);
    auto [train_graph, test_edges] = split_train_test(bundle.graph, cfg.train_fraction, cfg.seed);
    const EvalConfig eval_cfg = eval_config_from(cfg);
    const auto test_items = test_items_by_user(train_graph, test_edges);

    const Checkpoint clean = load_checkpoint(clean_checkpoint_path);
    if (clean.base.rows != train_graph.num_nodes())
        throw UserError("evaluate: clean checkpoint does not match the dataset/split");
    const double hr_raw =
        evaluate_graph(train_graph, clean.base, nullptr, test_items, eval_cfg).hr;

    const auto warm_final = aggregate(
        propagate(train_graph, normalize(train_graph), clean.base, cfg.num_layers),
        cfg.aggregation);
    const AttackSpec spec = build_spec_for(cfg, train_graph, bundle, warm_final);

    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    if (!ckpt.generator.has_value())
        throw UserError("evaluate: checkpoint carries no trigger generator; use `run` for "
                        "poisoned-graph attacks");
    ModelParams params;
    params.dim = ckpt.dim;
    params.num_layers = ckpt.num_layers;
    params.base = ckpt.base;
    const BackdoorEvaluation eval = evaluate_backdoor(train_graph, params, *ckpt.generator, spec,
                                                      test_edges, hr_raw, eval_cfg);

    MetricsReport report;
    report.attack = "snt-ba";
    report.seed = cfg.seed;
    report.k_rec = cfg.k_rec;
    report.n_hit = cfg.n_hit;
    report.hr_raw = hr_raw;
    report.acc = eval.triggered.acc;
    report.cvr = eval.triggered.cvr;
    report.hr_dormant = eval.dormant.hr;
    report.hr_triggered = eval.triggered.hr;
    report.decline_rate = eval.decline;

    fs::create_directories(opts.out_dir);
    std::ofstream out(fs::path(opts.out_dir) / "metrics.txt");
    write_metrics_report(report, out);
    write_metrics_report(report, std::cout);
    return 0;
}

int cmd_dump_embeddings(const std::string& checkpoint_path, const std::string& out_path) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    std::ofstream out(out_path);
    if (!out) throw UserError("cannot write embeddings file: " + out_path);
    const auto put_row = [&](std::size_t node, const char* kind, std::span<const double> row) {
        out << node << '\t' << kind;
        for (double v : row) out << '\t' << v;
        out << '\n';
    };
    std::size_t node = 0;
    for (std::uint64_t u = 0; u < ckpt.num_users; ++u) put_row(node++, "user", ckpt.base.row(u));
    for (std::uint64_t i = 0; i < ckpt.num_items; ++i)
        put_row(node++, "item", ckpt.base.row(ckpt.num_users + i));
    if (ckpt.generator.has_value())
        put_row(node++, "fake_user", std::span<const double>(ckpt.generator->fake_user_embedding));
    std::cout << "wrote " << node << " rows to " << out_path << "\n";
    return 0;
}

int cmd_compare(const std::string& reports_dir) {
    std::vector<MetricsReport> reports;
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(reports_dir))
        if (entry.is_regular_file() && entry.path().filename() == "metrics.txt")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f);
        reports.push_back(read_metrics_report(in));
    }
    if (reports.empty()) throw UserError("compare: no metrics.txt files under " + reports_dir);
    write_summary_table(reports, std::cout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph-recommender attack workbench"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string input_file;
    std::string checkpoint_path;
    std::string clean_checkpoint_path;
    std::string dump_out = "embeddings.tsv";
    std::string reports_dir;

    auto* ingest = app.add_subcommand("ingest", "ratings file -> graph dump + stats");
    ingest->add_option("file", input_file, "ratings file")->required();
    add_common(ingest, opts);

    auto* train_cmd = app.add_subcommand("train", "config -> clean checkpoint");
    add_common(train_cmd, opts);

    auto* attack = app.add_subcommand("attack", "clean checkpoint + attack -> attacked model");
    attack->add_option("checkpoint", checkpoint_path, "clean checkpoint (.grfb)")->required();
    add_common(attack, opts);

    auto* evaluate = app.add_subcommand("evaluate", "checkpoint -> metrics report");
    evaluate->add_option("checkpoint", checkpoint_path, "attacked checkpoint (.grfb)")->required();
    evaluate->add_option("--clean", clean_checkpoint_path, "clean checkpoint for hr_raw")
        ->required();
    add_common(evaluate, opts);

    auto* run = app.add_subcommand("run", "end-to-end experiment from a config");
    add_common(run, opts);

    auto* oracle_check =
        app.add_subcommand("oracle-check", "run the engine-vs-oracle agreement suites");

    auto* dump = app.add_subcommand("dump-embeddings", "checkpoint -> text embedding table");
    dump->add_option("checkpoint", checkpoint_path, "checkpoint (.grfb)")->required();
    dump->add_option("--dest", dump_out, "output path");

    auto* compare = app.add_subcommand("compare", "directory of reports -> summary table");
    compare->add_option("dir", reports_dir, "directory containing metrics.txt files")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return cmd_ingest(opts, input_file);
        if (train_cmd->parsed()) return cmd_train(opts);
        if (attack->parsed()) return cmd_attack(opts, checkpoint_path);
        if (evaluate->parsed()) return cmd_evaluate(opts, checkpoint_path, clean_checkpoint_path);
        if (run->parsed()) return cmd_run(opts);
        if (oracle_check->parsed()) return run_oracle_checks(std::cout) ? 0 : 1;
        if (dump->parsed()) return cmd_dump_embeddings(checkpoint_path, dump_out);
        if (compare->parsed()) return cmd_compare(reports_dir);
    } catch (const UserError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const InternalError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
