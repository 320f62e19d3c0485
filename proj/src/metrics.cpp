#include "recforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace recforge {

RankedList top_k(const EmbeddingTable& final_embeddings, const InteractionGraph& graph,
                 idx_t user, idx_t k) {
    if (user >= graph.num_users) throw UserError("top_k: user index out of range");
    if (k < 1) throw UserError("top_k: k must be >= 1");

    const auto train_items = graph.items_of(user);
    const idx_t rankable = graph.num_real_items();
    const auto urow = final_embeddings.row(user_row(user));

    std::vector<std::pair<double, idx_t>> scored;
    scored.reserve(rankable);
    for (idx_t i = 0; i < rankable; ++i) {
        if (std::binary_search(train_items.begin(), train_items.end(), i)) continue;
        scored.emplace_back(dot(urow, final_embeddings.row(item_row(graph, i))), i);
    }

    const auto better = [](const std::pair<double, idx_t>& a, const std::pair<double, idx_t>& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    };
    RankedList out;
    if (scored.size() <= k) {
        std::sort(scored.begin(), scored.end(), better);
        out.truncated = scored.size() < k;
    } else {
        std::partial_sort(scored.begin(), scored.begin() + k, scored.end(), better);
        scored.resize(k);
    }
    out.items.reserve(scored.size());
    for (const auto& [s, i] : scored) out.items.push_back(i);
    return out;
}

namespace {

std::size_t target_hits(const RankedList& list, const std::vector<idx_t>& target_items, idx_t k) {
    std::size_t hits = 0;
    const std::size_t limit = std::min<std::size_t>(list.items.size(), k);
    for (std::size_t r = 0; r < limit; ++r)
        if (std::binary_search(target_items.begin(), target_items.end(), list.items[r])) ++hits;
    return hits;
}

}  // namespace

double acc(const std::vector<RankedList>& target_user_lists, const AttackSpec& spec, idx_t k) {
    if (target_user_lists.empty()) throw UserError("acc: empty target user set");
    std::size_t attacked = 0;
    for (const auto& list : target_user_lists)
        if (target_hits(list, spec.target_items, k) > 0) ++attacked;
    return static_cast<double>(attacked) / static_cast<double>(target_user_lists.size());
}

double cvr(const std::vector<RankedList>& target_user_lists, const AttackSpec& spec, idx_t k) {
    if (target_user_lists.empty()) throw UserError("cvr: empty target user set");
    double sum = 0.0;
    for (const auto& list : target_user_lists)
        sum += static_cast<double>(target_hits(list, spec.target_items, k)) /
               static_cast<double>(k);
    return sum / static_cast<double>(target_user_lists.size());
}

double hr_at_n(const std::vector<RankedList>& per_user_lists,
               const std::vector<std::vector<idx_t>>& test_items_per_user, idx_t n) {
    if (per_user_lists.size() != test_items_per_user.size())
        throw InternalError("hr_at_n: list/test size mismatch");
    double sum = 0.0;
    std::size_t evaluable = 0;
    for (std::size_t u = 0; u < per_user_lists.size(); ++u) {
        const auto& tests = test_items_per_user[u];
        if (tests.empty()) continue;
        ++evaluable;
        std::size_t hits = 0;
        const auto& items = per_user_lists[u].items;
        const std::size_t limit = std::min<std::size_t>(items.size(), n);
        for (std::size_t r = 0; r < limit; ++r)
            if (std::binary_search(tests.begin(), tests.end(), items[r])) ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(n);
    }
    if (evaluable == 0) throw UserError("hr_at_n: no evaluable users");
    return sum / static_cast<double>(evaluable);
}

double decline_rate(double raw_hr, double attacked_hr) {
    if (!(raw_hr > 0.0)) throw UserError("decline_rate: raw hit rate must be positive");
    return (raw_hr - attacked_hr) / raw_hr;
}

std::vector<std::vector<idx_t>> test_items_by_user(
    const InteractionGraph& graph, const std::vector<std::pair<idx_t, idx_t>>& test_edges) {
    std::vector<std::vector<idx_t>> out(graph.num_real_users());
    for (const auto& [u, i] : test_edges) {
        if (u < out.size()) out[u].push_back(i);
    }
    for (auto& v : out) std::sort(v.begin(), v.end());
    return out;
}

BranchMetrics evaluate_graph(const InteractionGraph& graph, const EmbeddingTable& base,
                             const AttackSpec* spec,
                             const std::vector<std::vector<idx_t>>& test_items,
                             const EvalConfig& cfg) {
    const auto adj = normalize(graph);
    const auto state = propagate(graph, adj, base, cfg.num_layers);
    const auto final_emb = aggregate(state, cfg.aggregation);

    const idx_t list_len = std::max(cfg.k_rec, cfg.n_hit);
    BranchMetrics metrics;

    if (spec != nullptr) {
        std::vector<RankedList> target_lists;
        target_lists.reserve(spec->target_users.size());
        for (idx_t t : spec->target_users)
            target_lists.push_back(top_k(final_emb, graph, t, list_len));
        metrics.acc = acc(target_lists, *spec, cfg.k_rec);
        metrics.cvr = cvr(target_lists, *spec, cfg.k_rec);
    }

    std::vector<RankedList> all_lists;
    all_lists.reserve(graph.num_real_users());
    for (idx_t u = 0; u < graph.num_real_users(); ++u) {
        if (u < test_items.size() && test_items[u].empty()) {
            all_lists.push_back(RankedList{});  // skipped by hr_at_n
            continue;
        }
        all_lists.push_back(top_k(final_emb, graph, u, list_len));
    }
    metrics.hr = hr_at_n(all_lists, test_items, cfg.n_hit);
    return metrics;
}

BackdoorEvaluation evaluate_backdoor(const InteractionGraph& clean_graph,
                                     const ModelParams& params, const TriggerGenerator& gen,
                                     const AttackSpec& spec,
                                     const std::vector<std::pair<idx_t, idx_t>>& test_edges,
                                     double hr_raw, const EvalConfig& cfg) {
    if (params.base.rows != clean_graph.num_nodes())
        throw UserError("evaluate_backdoor: parameters do not match the clean graph");
    spec.validate(clean_graph);

    const auto test_items = test_items_by_user(clean_graph, test_edges);

    BackdoorEvaluation eval;
    eval.hr_raw = hr_raw;
    eval.dormant = evaluate_graph(clean_graph, params.base, &spec, test_items, cfg);

    const auto triggered_graph = inject_trigger(clean_graph, spec);
    EmbeddingTable aug(triggered_graph.num_nodes(), params.base.dim);
    const idx_t clean_users = clean_graph.num_users;
    for (idx_t u = 0; u < clean_users; ++u) {
        const auto src = params.base.row(u);
        std::copy(src.begin(), src.end(), aug.row(u).begin());
    }
    std::copy(gen.fake_user_embedding.begin(), gen.fake_user_embedding.end(),
              aug.row(clean_users).begin());
    for (idx_t i = 0; i < clean_graph.num_items; ++i) {
        const auto src = params.base.row(static_cast<std::size_t>(clean_users) + i);
        std::copy(src.begin(), src.end(), aug.row(item_row(triggered_graph, i)).begin());
    }
    eval.triggered = evaluate_graph(triggered_graph, aug, &spec, test_items, cfg);
    eval.decline = decline_rate(hr_raw, eval.dormant.hr);
    return eval;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
}

}  // namespace

void write_metrics_report(const MetricsReport& report, std::ostream& out) {
    out << "attack = " << report.attack << "\n";
    out << "seed = " << report.seed << "\n";
    out << "acc = " << fmt_double(report.acc) << "\n";
    out << "cvr = " << fmt_double(report.cvr) << "\n";
    out << "hr_raw = " << fmt_double(report.hr_raw) << "\n";
    out << "hr_dormant = " << fmt_double(report.hr_dormant) << "\n";
    out << "hr_triggered = " << fmt_double(report.hr_triggered) << "\n";
    out << "decline_rate = " << fmt_double(report.decline_rate) << "\n";
    out << "k_rec = " << report.k_rec << "\n";
    out << "n_hit = " << report.n_hit << "\n";
}

MetricsReport read_metrics_report(std::istream& in) {
    MetricsReport report;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto trim = [](std::string& s) {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
                s.pop_back();
        };
        trim(key);
        trim(value);
        try {
            if (key == "attack") report.attack = value;
            else if (key == "seed") report.seed = std::stoull(value);
            else if (key == "acc") report.acc = std::stod(value);
            else if (key == "cvr") report.cvr = std::stod(value);
            else if (key == "hr_raw") report.hr_raw = std::stod(value);
            else if (key == "hr_dormant") report.hr_dormant = std::stod(value);
            else if (key == "hr_triggered") report.hr_triggered = std::stod(value);
            else if (key == "decline_rate") report.decline_rate = std::stod(value);
            else if (key == "k_rec") report.k_rec = static_cast<idx_t>(std::stoul(value));
            else if (key == "n_hit") report.n_hit = static_cast<idx_t>(std::stoul(value));
        } catch (const std::exception&) {
            throw UserError("metrics report: unparsable value for key '" + key + "'");
        }
    }
    return report;
}

void write_summary_table(const std::vector<MetricsReport>& reports, std::ostream& out) {
    out << "attack\tseed\tACC\tCVR\tHR@N\thr_dormant\tdecline_rate\n";
    for (const auto& r : reports) {
        out << r.attack << '\t' << r.seed << '\t' << fmt_double(r.acc) << '\t'
            << fmt_double(r.cvr) << '\t' << fmt_double(r.hr_triggered) << '\t'
            << fmt_double(r.hr_dormant) << '\t' << fmt_double(r.decline_rate) << '\n';
    }
}

}  // namespace recforge
