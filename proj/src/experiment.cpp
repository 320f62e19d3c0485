#include "recforge/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "recforge/checkpoint.hpp"
#include "recforge/rng.hpp"

namespace recforge {

DatasetBundle load_dataset(const ExperimentConfig& cfg) {
    DatasetBundle bundle;
    if (cfg.dataset == "synthetic") {
        oracle::SyntheticSpec spec = cfg.synthetic;
        spec.seed = cfg.seed;
        auto synth = oracle::generate_synthetic(spec);
        bundle.graph = std::move(synth.graph);
        bundle.user_cluster = std::move(synth.user_cluster);
        bundle.item_cluster = std::move(synth.item_cluster);
        bundle.stats.num_users = bundle.graph.num_users;
        bundle.stats.num_items = bundle.graph.num_items;
        bundle.stats.num_interactions = bundle.graph.num_edges();
        return bundle;
    }
    std::ifstream in(cfg.dataset);
    if (!in) throw UserError("cannot open dataset file: " + cfg.dataset);
    const auto records = parse_ratings(in);
    IdMapping mapping;
    bundle.graph = ingest_ratings(records, cfg.threshold_mode, &mapping, &bundle.stats);
    bundle.mapping = std::move(mapping);
    return bundle;
}

namespace {

std::vector<std::string> load_item_categories(const std::string& path, const IdMapping& mapping,
                                              idx_t num_items) {
    std::ifstream in(path);
    if (!in) throw UserError("cannot open categories file: " + path);
    std::unordered_map<std::string, std::string> by_external;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw UserError("categories file line " + std::to_string(line_no) +
                            ": expected 'item_id<TAB>category'");
        std::string id = line.substr(0, tab);
        std::string cat = line.substr(tab + 1);
        if (!cat.empty() && cat.back() == '\r') cat.pop_back();
        by_external[id] = cat;
    }
    std::vector<std::string> labels(num_items);
    for (idx_t i = 0; i < num_items; ++i) {
        const auto it = by_external.find(mapping.item_ids[i]);
        if (it == by_external.end())
            throw UserError("categories file: no category for item '" + mapping.item_ids[i] + "'");
        labels[i] = it->second;
    }
    return labels;
}

std::vector<std::string> cluster_strings(const std::vector<int>& labels) {
    std::vector<std::string> out;
    out.reserve(labels.size());
    for (int c : labels) out.push_back("c" + std::to_string(c));
    return out;
}

// Item rows of a graph-shaped table as their own table.
EmbeddingTable item_rows_of(const InteractionGraph& graph, const EmbeddingTable& table) {
    EmbeddingTable out(graph.num_real_items(), table.dim);
    for (idx_t i = 0; i < graph.num_real_items(); ++i) {
        const auto src = table.row(item_row(graph, i));
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

EmbeddingTable user_rows_of(const InteractionGraph& graph, const EmbeddingTable& table) {
    EmbeddingTable out(graph.num_real_users(), table.dim);
    for (idx_t u = 0; u < graph.num_real_users(); ++u) {
        const auto src = table.row(user_row(u));
        std::copy(src.begin(), src.end(), out.row(u).begin());
    }
    return out;
}

}  // namespace

AttackSpec build_spec_for(const ExperimentConfig& cfg, const InteractionGraph& train_graph,
                          const DatasetBundle& bundle, const EmbeddingTable& warm_final) {
    // Target items: explicit list wins; otherwise pick by rule. Synthetic
    // datasets take the head of cluster 0 so that S is category-coherent;
    // file datasets fall back to a seeded uniform pick.
    std::vector<idx_t> target_items = cfg.target_item_list;
    if (target_items.empty()) {
        if (cfg.target_item_count == 0) throw UserError("config: target_items must be non-empty");
        if (!bundle.item_cluster.empty()) {
            for (idx_t i = 0; i < train_graph.num_items && target_items.size() < cfg.target_item_count;
                 ++i)
                if (bundle.item_cluster[i] == 0) target_items.push_back(i);
        } else {
            Rng rng = Rng::fork(cfg.seed, 0x5349ULL);
            std::set<idx_t> chosen;
            while (chosen.size() < cfg.target_item_count && chosen.size() < train_graph.num_items)
                chosen.insert(static_cast<idx_t>(rng.next_below(train_graph.num_items)));
            target_items.assign(chosen.begin(), chosen.end());
        }
        if (target_items.size() < cfg.target_item_count)
            throw UserError("config: could not select the requested number of target items");
    }

    TargetUserRule user_rule;
    if (!cfg.target_user_list.empty()) {
        user_rule.mode = TargetUserRule::Mode::explicit_list;
        user_rule.users = cfg.target_user_list;
    } else if (!bundle.user_cluster.empty()) {
        // Users from the last cluster: disjoint from S's cluster when the
        // fixture has two or more planted clusters.
        const int last = *std::max_element(bundle.user_cluster.begin(), bundle.user_cluster.end());
        user_rule.mode = TargetUserRule::Mode::explicit_list;
        for (idx_t u = 0; u < train_graph.num_users && user_rule.users.size() < cfg.target_user_count;
             ++u)
            if (bundle.user_cluster[u] == last) user_rule.users.push_back(u);
        if (user_rule.users.size() < cfg.target_user_count)
            throw UserError("config: could not select the requested number of target users");
    } else {
        user_rule.mode = TargetUserRule::Mode::random_count;
        user_rule.count = cfg.target_user_count;
        user_rule.seed = Rng::fork(cfg.seed, 0x5455ULL).next_u64();
    }

    CategorySource categories;
    categories.num_clusters = cfg.num_clusters;
    categories.seed = Rng::fork(cfg.seed, 0x434cULL).next_u64();
    EmbeddingTable item_emb;
    if (!cfg.categories_file.empty()) {
        if (!bundle.mapping.has_value())
            throw UserError("config: categories_file requires a file dataset");
        categories.item_categories =
            load_item_categories(cfg.categories_file, *bundle.mapping, train_graph.num_items);
    } else if (!bundle.item_cluster.empty()) {
        categories.item_categories = cluster_strings(bundle.item_cluster);
    } else {
        item_emb = item_rows_of(train_graph, warm_final);
        categories.item_embeddings = &item_emb;
    }
    return build_attack_spec(train_graph, std::move(target_items), user_rule, categories);
}

TrainConfig train_config_from(const ExperimentConfig& cfg, bool attack_losses) {
    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.dim = cfg.dim;
    tc.num_layers = cfg.num_layers;
    tc.aggregation = cfg.aggregation;
    tc.lr = cfg.lr;
    tc.weights.lambda_reg = cfg.lambda_reg;
    if (attack_losses) {
        tc.weights.alpha = cfg.alpha;
        tc.weights.beta = cfg.beta;
        tc.weights.gamma = cfg.gamma;
    } else {
        tc.weights.alpha = 0.0;
        tc.weights.beta = 0.0;
        tc.weights.gamma = 1.0;
    }
    tc.batch_size = cfg.batch_size;
    tc.seed = cfg.seed;
    return tc;
}

EvalConfig eval_config_from(const ExperimentConfig& cfg) {
    EvalConfig ec;
    ec.k_rec = cfg.k_rec;
    ec.n_hit = cfg.n_hit;
    ec.num_layers = cfg.num_layers;
    ec.aggregation = cfg.aggregation;
    return ec;
}

EmbeddingTable extract_real_rows(const InteractionGraph& poisoned, const EmbeddingTable& base,
                                 const InteractionGraph& clean) {
    if (poisoned.num_real_users() != clean.num_users ||
        poisoned.num_real_items() != clean.num_items)
        throw InternalError("extract_real_rows: poisoned/clean shapes disagree");
    EmbeddingTable out(clean.num_nodes(), base.dim);
    for (idx_t u = 0; u < clean.num_users; ++u) {
        const auto src = base.row(user_row(u));
        std::copy(src.begin(), src.end(), out.row(user_row(u)).begin());
    }
    for (idx_t i = 0; i < clean.num_items; ++i) {
        const auto src = base.row(item_row(poisoned, i));
        std::copy(src.begin(), src.end(), out.row(item_row(clean, i)).begin());
    }
    return out;
}

namespace {

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw UserError("cannot write file: " + path.string());
    out << text;
}

EmbeddingTable final_embeddings_of(const InteractionGraph& graph, const EmbeddingTable& base,
                                   const EvalConfig& cfg) {
    const auto adj = normalize(graph);
    return aggregate(propagate(graph, adj, base, cfg.num_layers), cfg.aggregation);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_root, bool quiet,
                                std::ostream& log) {
    namespace fs = std::filesystem;
    const std::string tag = config_hash(cfg) + "-s" + std::to_string(cfg.seed);
    const fs::path out_dir = out_root / tag;
    fs::create_directories(out_dir);
    write_text_file(out_dir / "resolved.cfg", resolved_config_text(cfg));

    DatasetBundle bundle = load_dataset(cfg);
    if (!quiet)
        log << "dataset: " << bundle.stats.num_users << " users, " << bundle.stats.num_items
            << " items, " << bundle.stats.num_interactions << " interactions\n";

    auto [train_graph, test_edges] = split_train_test(bundle.graph, cfg.train_fraction, cfg.seed);
    {
        std::ofstream out(out_dir / "train.edges");
        write_edge_dump(train_graph, out);
        std::ofstream test_out(out_dir / "test.edges");
        for (const auto& [u, i] : test_edges) test_out << u << '\t' << i << '\n';
        if (bundle.mapping.has_value()) {
            std::ofstream map_out(out_dir / "idmap.tsv");
            write_id_mapping(*bundle.mapping, map_out);
        }
        if (!bundle.user_cluster.empty()) {
            std::ofstream lbl(out_dir / "labels.tsv");
            for (std::size_t u = 0; u < bundle.user_cluster.size(); ++u)
                lbl << 'u' << u << '\t' << bundle.user_cluster[u] << '\n';
            for (std::size_t i = 0; i < bundle.item_cluster.size(); ++i)
                lbl << 'i' << i << '\t' << bundle.item_cluster[i] << '\n';
        }
    }

    const EvalConfig eval_cfg = eval_config_from(cfg);
    const auto test_items = test_items_by_user(train_graph, test_edges);

    // Clean baseline: same seed, BPR only. Provides hr_raw and the warm
    // embeddings used for category clustering and baseline attacks.
    if (!quiet) log << "training clean baseline (" << cfg.epochs << " epochs)\n";
    const TrainConfig clean_tc = train_config_from(cfg, /*attack_losses=*/false);
    TrainResult clean = train(train_graph, nullptr, clean_tc);
    {
        std::ofstream out(out_dir / "clean_train_log.tsv");
        write_training_log(clean.log, out);
        save_checkpoint(Checkpoint{train_graph.num_users, train_graph.num_items, cfg.dim,
                                   cfg.num_layers, clean.params.base, std::nullopt},
                        out_dir / "clean_model.grfb");
    }
    const BranchMetrics clean_metrics =
        evaluate_graph(train_graph, clean.params.base, nullptr, test_items, eval_cfg);
    const double hr_raw = clean_metrics.hr;
    if (!quiet) log << "clean HR@" << cfg.n_hit << " = " << hr_raw << "\n";

    const EmbeddingTable warm_final =
        final_embeddings_of(train_graph, clean.params.base, eval_cfg);
    const AttackSpec spec = build_spec_for(cfg, train_graph, bundle, warm_final);
    {
        std::ofstream out(out_dir / "attack_spec.txt");
        write_attack_spec(spec, out);
    }

    MetricsReport report;
    report.attack = cfg.attack == "chain" ? "chain-" + std::to_string(cfg.chain_m) : cfg.attack;
    report.seed = cfg.seed;
    report.k_rec = cfg.k_rec;
    report.n_hit = cfg.n_hit;
    report.hr_raw = hr_raw;

    if (cfg.attack == "snt-ba") {
        if (!quiet) log << "training snt-ba (joint losses)\n";
        const TrainConfig atk_tc = train_config_from(cfg, /*attack_losses=*/true);
        TrainResult attacked = train(train_graph, &spec, atk_tc);
        {
            std::ofstream out(out_dir / "train_log.tsv");
            write_training_log(attacked.log, out);
            save_checkpoint(Checkpoint{train_graph.num_users, train_graph.num_items, cfg.dim,
                                       cfg.num_layers, attacked.params.base, attacked.generator},
                            out_dir / "model.grfb");
        }
        const BackdoorEvaluation eval = evaluate_backdoor(
            train_graph, attacked.params, *attacked.generator, spec, test_edges, hr_raw, eval_cfg);
        report.acc = eval.triggered.acc;
        report.cvr = eval.triggered.cvr;
        report.hr_dormant = eval.dormant.hr;
        report.hr_triggered = eval.triggered.hr;
        report.decline_rate = eval.decline;
    } else {
        PoisonResult poison = [&]() {
            const double fraction = cfg.resolved_attack_fraction();
            const std::uint64_t seed = Rng::fork(cfg.seed, 0x41545441ULL).next_u64();
            if (cfg.attack == "random") return random_attack(train_graph, spec, fraction, seed);
            if (cfg.attack == "popular") {
                std::vector<std::string> user_cats;
                if (!bundle.user_cluster.empty()) {
                    user_cats = cluster_strings(bundle.user_cluster);
                } else {
                    const auto labels = cluster_labels(user_rows_of(train_graph, warm_final),
                                                       cfg.num_clusters,
                                                       Rng::fork(cfg.seed, 0x55434cULL).next_u64());
                    user_cats = cluster_strings(labels);
                }
                return popular_attack(train_graph, spec, fraction, user_cats, clean.params.base,
                                      seed);
            }
            if (cfg.attack == "vote")
                return vote_attack(train_graph, spec, fraction, clean.params.base, seed);
            if (cfg.attack == "chain")
                return multi_trigger_attack(train_graph, spec, cfg.chain_m, seed);
            throw UserError("unknown attack '" + cfg.attack + "'");
        }();
        {
            std::ofstream out(out_dir / "poison_plan.txt");
            write_poison_plan(poison.plan, out);
            std::ofstream graph_out(out_dir / "poisoned.edges");
            write_edge_dump(poison.graph, graph_out);
        }
        if (!quiet)
            log << "retraining on poisoned graph (" << poison.plan.fake_users.size()
                << " fake users, " << poison.plan.fake_items << " fake items)\n";
        const EmbeddingTable init = initial_embeddings_for(
            poison.graph, poison.plan, cfg.dim, Rng::fork(cfg.seed, 0x494e4954ULL).next_u64());
        // Chain triggers are the multi-trigger backdoor ablation and train
        // with the joint losses; the shilling baselines are plain data
        // poisoning and retrain with the recommendation loss alone.
        const bool joint = cfg.attack == "chain";
        const TrainConfig retrain_tc = train_config_from(cfg, /*attack_losses=*/joint);
        TrainResult retrained = train(poison.graph, joint ? &spec : nullptr, retrain_tc, &init);
        {
            std::ofstream out(out_dir / "train_log.tsv");
            write_training_log(retrained.log, out);
            save_checkpoint(Checkpoint{poison.graph.num_users, poison.graph.num_items, cfg.dim,
                                       cfg.num_layers, retrained.params.base, std::nullopt},
                            out_dir / "model.grfb");
        }
        const BranchMetrics active =
            evaluate_graph(poison.graph, retrained.params.base, &spec, test_items, eval_cfg);
        const EmbeddingTable real_rows =
            extract_real_rows(poison.graph, retrained.params.base, train_graph);
        const BranchMetrics dormant =
            evaluate_graph(train_graph, real_rows, &spec, test_items, eval_cfg);
        report.acc = active.acc;
        report.cvr = active.cvr;
        report.hr_triggered = active.hr;
        report.hr_dormant = dormant.hr;
        report.decline_rate = decline_rate(hr_raw, dormant.hr);
    }

    {
        std::ofstream out(out_dir / "metrics.txt");
        write_metrics_report(report, out);
        std::ofstream summary(out_dir / "summary.tsv");
        write_summary_table({report}, summary);
    }
    if (!quiet)
        log << "attack=" << report.attack << " acc=" << report.acc << " cvr=" << report.cvr
            << " hr_dormant=" << report.hr_dormant << " hr_triggered=" << report.hr_triggered
            << " decline=" << report.decline_rate << "\n";
    return ExperimentResult{std::move(report), out_dir};
}

bool run_oracle_checks(std::ostream& out) {
    bool ok = true;
    const auto verdict = [&](const char* name, bool pass, const std::string& detail) {
        out << (pass ? "[PASS] " : "[FAIL] ") << name;
        if (!detail.empty()) out << " (" << detail << ")";
        out << "\n";
        ok = ok && pass;
    };

    // Engine propagation vs dense matrix oracle.
    {
        double worst = 0.0;
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            Rng rng = Rng::fork(1000, seed);
            const idx_t U = 2 + static_cast<idx_t>(rng.next_below(5));
            const idx_t I = 2 + static_cast<idx_t>(rng.next_below(5));
            std::vector<std::pair<idx_t, idx_t>> edges;
            for (idx_t u = 0; u < U; ++u)
                for (idx_t i = 0; i < I; ++i)
                    if (rng.next_unit() < 0.45) edges.emplace_back(u, i);
            if (edges.empty()) edges.emplace_back(0, 0);
            const auto graph = InteractionGraph::from_edges(U, I, std::move(edges));
            const auto params = init_embeddings(graph.num_nodes(), 4, 3, seed + 7);
            const int K = 1 + static_cast<int>(seed % 4);
            const auto state = propagate(graph, normalize(graph), params.base, K);
            const auto dense = oracle::dense_propagate(graph, params.base, K);
            for (int k = 0; k <= K; ++k)
                for (std::size_t r = 0; r < graph.num_nodes(); ++r)
                    for (std::size_t c = 0; c < 4; ++c)
                        worst = std::max(worst, std::abs(state.layers[k].row(r)[c] -
                                                         dense[k][r][c]));
        }
        std::ostringstream d;
        d << "max |err| = " << worst;
        verdict("propagation vs dense oracle", worst < 1e-10, d.str());
    }

    // Analytic gradients vs central differences on a trigger-injected fixture.
    {
        double worst_rel = 0.0;
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            Rng rng = Rng::fork(2000, seed);
            const idx_t U = 3, I = 4;
            std::vector<std::pair<idx_t, idx_t>> edges;
            for (idx_t u = 0; u < U; ++u)
                for (idx_t i = 0; i < I; ++i)
                    if (rng.next_unit() < 0.6) edges.emplace_back(u, i);
            if (edges.empty()) edges.emplace_back(0, 0);
            const auto clean = InteractionGraph::from_edges(U, I, std::move(edges));
            AttackSpec spec;
            spec.target_users = {0, 1};
            spec.target_items = {0};
            spec.candidate_items = {0, 1, 2};
            spec.noncandidate_items = {3};
            spec.fake_user_index = U;
            const auto injected = inject_trigger(clean, spec);
            const auto adj = normalize(injected);
            auto params = init_embeddings(clean.num_nodes(), 3, 2, seed + 11);
            auto gen = init_trigger_generator(3, 3, seed + 13);
            gen.centroid = {0.1, -0.2, 0.3};
            gen.fake_user_embedding = generate_fake_user(gen);
            const auto batch = sample_batch(clean, &spec, 6, seed + 17);
            LossWeights weights;
            const auto grads = compute_gradients(injected, adj, params.base, &gen, batch, weights,
                                                 2, AggregationMode::paper_literal);
            const auto analytic = flatten_gradients(grads, true);
            const auto x0 = flatten_params(params.base, &gen);
            const auto f = [&](const std::vector<double>& x) {
                EmbeddingTable base = params.base;
                TriggerGenerator g = gen;
                unflatten_params(x, base, &g);
                return evaluate_joint_loss(injected, adj, base, &g, batch, weights, 2,
                                           AggregationMode::paper_literal)
                    .l_total;
            };
            const auto fd = oracle::finite_diff_grad(f, x0, 1e-4);
            for (std::size_t n = 0; n < fd.size(); ++n) {
                const double scale = std::max({std::abs(analytic[n]), std::abs(fd[n]), 1e-4});
                worst_rel = std::max(worst_rel, std::abs(analytic[n] - fd[n]) / scale);
            }
        }
        std::ostringstream d;
        d << "max rel err = " << worst_rel;
        verdict("gradients vs finite differences", worst_rel < 1e-5, d.str());
    }

    // Engine top-k vs exhaustive sort oracle.
    {
        bool agree = true;
        for (std::uint64_t seed = 0; seed < 10 && agree; ++seed) {
            Rng rng = Rng::fork(3000, seed);
            const idx_t U = 6, I = 10;
            std::vector<std::pair<idx_t, idx_t>> edges;
            for (idx_t u = 0; u < U; ++u)
                for (idx_t i = 0; i < I; ++i)
                    if (rng.next_unit() < 0.3) edges.emplace_back(u, i);
            if (edges.empty()) edges.emplace_back(0, 0);
            const auto graph = InteractionGraph::from_edges(U, I, std::move(edges));
            EmbeddingTable final_emb(graph.num_nodes(), 4);
            for (double& v : final_emb.data) v = rng.next_gaussian(0.0, 1.0);

            std::vector<std::vector<double>> table(U, std::vector<double>(I, 0.0));
            std::vector<std::vector<bool>> excluded(U, std::vector<bool>(I, false));
            for (idx_t u = 0; u < U; ++u) {
                for (idx_t i = 0; i < I; ++i) {
                    table[u][i] = dot(final_emb.row(user_row(u)),
                                      final_emb.row(item_row(graph, i)));
                    excluded[u][i] = graph.has_edge(u, i);
                }
            }
            const auto oracle_lists = oracle::exhaustive_topk(table, excluded, 4);
            for (idx_t u = 0; u < U; ++u) {
                const auto engine = top_k(final_emb, graph, u, 4);
                if (engine.items != oracle_lists[u]) agree = false;
            }
        }
        verdict("top-k vs exhaustive sort oracle", agree, "");
    }
    return ok;
}

}  // namespace recforge
