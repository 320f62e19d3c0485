#include "recforge/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace recforge {

double ExperimentConfig::resolved_attack_fraction() const {
    if (attack_fraction > 0.0) return attack_fraction;
    if (attack == "random") return 0.20;
    if (attack == "popular") return 0.05;
    if (attack == "vote") return 0.10;
    return 0.0;
}

namespace {

std::vector<idx_t> parse_index_list(const std::string& value, const std::string& key) {
    std::vector<idx_t> out;
    std::stringstream ss(value);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(static_cast<idx_t>(std::stoul(tok)));
        } catch (const std::exception&) {
            throw UserError("config: bad index '" + tok + "' in " + key);
        }
    }
    return out;
}

double parse_double(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw UserError("config: bad number '" + value + "' for key '" + key + "'");
    }
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    try {
        return std::stoull(value);
    } catch (const std::exception&) {
        throw UserError("config: bad integer '" + value + "' for key '" + key + "'");
    }
}

}  // namespace

ExperimentConfig parse_config_text(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto trim = [](std::string& s) {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
                s.pop_back();
        };
        trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UserError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        trim(key);
        trim(value);

        if (key == "dataset") cfg.dataset = value;
        else if (key == "synthetic.users_per_cluster")
            cfg.synthetic.users_per_cluster = static_cast<idx_t>(parse_u64(value, key));
        else if (key == "synthetic.items_per_cluster")
            cfg.synthetic.items_per_cluster = static_cast<idx_t>(parse_u64(value, key));
        else if (key == "synthetic.num_clusters")
            cfg.synthetic.num_clusters = static_cast<idx_t>(parse_u64(value, key));
        else if (key == "synthetic.p_in") cfg.synthetic.p_in = parse_double(value, key);
        else if (key == "synthetic.p_out") cfg.synthetic.p_out = parse_double(value, key);
        else if (key == "threshold_mode") {
            if (value == "per_user_mean") cfg.threshold_mode = ThresholdMode::per_user_mean;
            else if (value == "global_mean") cfg.threshold_mode = ThresholdMode::global_mean;
            else throw UserError("config: unknown threshold_mode '" + value + "'");
        } else if (key == "train_fraction") cfg.train_fraction = parse_double(value, key);
        else if (key == "dim") cfg.dim = static_cast<idx_t>(parse_u64(value, key));
        else if (key == "num_layers") cfg.num_layers = static_cast<int>(parse_u64(value, key));
        else if (key == "aggregation") cfg.aggregation = parse_aggregation_mode(value);
        else if (key == "epochs") cfg.epochs = static_cast<int>(parse_u64(value, key));
        else if (key == "lr") cfg.lr = parse_double(value, key);
        else if (key == "alpha") cfg.alpha = parse_double(value, key);
        else if (key == "beta") cfg.beta = parse_double(value, key);
        else if (key == "gamma") cfg.gamma = parse_double(value, key);
        else if (key == "lambda_reg") cfg.lambda_reg = parse_double(value, key);
        else if (key == "batch_size") cfg.batch_size = parse_u64(value, key);
        else if (key == "k_rec") cfg.k_rec = static_cast<idx_t>(parse_u64(value, key));
        else if (key == "n_hit") cfg.n_hit = static_cast<idx_t>(parse_u64(value, key));
        else if (key == "target_items") {
            if (value.find(',') != std::string::npos) {
                cfg.target_item_list = parse_index_list(value, key);
            } else {
                cfg.target_item_count = static_cast<idx_t>(parse_u64(value, key));
            }
        } else if (key == "target_item_list") cfg.target_item_list = parse_index_list(value, key);
        else if (key == "target_users") {
            if (value.rfind("random:", 0) == 0) {
                cfg.target_user_count = static_cast<idx_t>(parse_u64(value.substr(7), key));
                cfg.target_user_list.clear();
            } else if (value.find(',') != std::string::npos) {
                cfg.target_user_list = parse_index_list(value, key);
            } else {
                cfg.target_user_count = static_cast<idx_t>(parse_u64(value, key));
            }
        } else if (key == "target_user_list") cfg.target_user_list = parse_index_list(value, key);
        else if (key == "attack") {
            if (value != "snt-ba" && value != "random" && value != "popular" && value != "vote" &&
                value != "chain")
                throw UserError("config: unknown attack '" + value + "'");
            cfg.attack = value;
        } else if (key == "chain_m") cfg.chain_m = static_cast<int>(parse_u64(value, key));
        else if (key == "attack_fraction") cfg.attack_fraction = parse_double(value, key);
        else if (key == "categories_file") cfg.categories_file = value;
        else if (key == "num_clusters") cfg.num_clusters = static_cast<idx_t>(parse_u64(value, key));
        else if (key == "seed") cfg.seed = parse_u64(value, key);
        else throw UserError("config: unknown key '" + key + "'");
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UserError("cannot open config file: " + path.string());
    return parse_config_text(in);
}

std::string resolved_config_text(const ExperimentConfig& cfg) {
    std::ostringstream out;
    char buf[64];
    const auto num = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };
    const auto list = [](const std::vector<idx_t>& v) {
        std::string s;
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (k > 0) s += ',';
            s += std::to_string(v[k]);
        }
        return s;
    };
    out << "dataset = " << cfg.dataset << "\n";
    if (cfg.dataset == "synthetic") {
        out << "synthetic.users_per_cluster = " << cfg.synthetic.users_per_cluster << "\n";
        out << "synthetic.items_per_cluster = " << cfg.synthetic.items_per_cluster << "\n";
        out << "synthetic.num_clusters = " << cfg.synthetic.num_clusters << "\n";
        out << "synthetic.p_in = " << num(cfg.synthetic.p_in) << "\n";
        out << "synthetic.p_out = " << num(cfg.synthetic.p_out) << "\n";
    }
    out << "threshold_mode = "
        << (cfg.threshold_mode == ThresholdMode::per_user_mean ? "per_user_mean" : "global_mean")
        << "\n";
    out << "train_fraction = " << num(cfg.train_fraction) << "\n";
    out << "dim = " << cfg.dim << "\n";
    out << "num_layers = " << cfg.num_layers << "\n";
    out << "aggregation = " << aggregation_mode_name(cfg.aggregation) << "\n";
    out << "epochs = " << cfg.epochs << "\n";
    out << "lr = " << num(cfg.lr) << "\n";
    out << "alpha = " << num(cfg.alpha) << "\n";
    out << "beta = " << num(cfg.beta) << "\n";
    out << "gamma = " << num(cfg.gamma) << "\n";
    out << "lambda_reg = " << num(cfg.lambda_reg) << "\n";
    out << "batch_size = " << cfg.batch_size << "\n";
    out << "k_rec = " << cfg.k_rec << "\n";
    out << "n_hit = " << cfg.n_hit << "\n";
    if (cfg.target_item_list.empty())
        out << "target_items = " << cfg.target_item_count << "\n";
    else
        out << "target_items = " << list(cfg.target_item_list) << "\n";
    if (cfg.target_user_list.empty())
        out << "target_users = random:" << cfg.target_user_count << "\n";
    else
        out << "target_users = " << list(cfg.target_user_list) << "\n";
    out << "attack = " << cfg.attack << "\n";
    out << "chain_m = " << cfg.chain_m << "\n";
    out << "attack_fraction = " << num(cfg.resolved_attack_fraction()) << "\n";
    out << "categories_file = " << cfg.categories_file << "\n";
    out << "num_clusters = " << cfg.num_clusters << "\n";
    out << "seed = " << cfg.seed << "\n";
    return out.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string text = resolved_config_text(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return std::string(buf);
}

}  // namespace recforge
