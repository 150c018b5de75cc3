#include "pada/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "pada/csvfmt.hpp"
#include "pada/errors.hpp"

#include "json.hpp"

namespace pada {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

bool parse_bool(const std::string& v, std::size_t line, const std::string& key) {
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    fail(line, "key '" + key + "' expects a boolean (true/false), got '" + v + "'");
}

std::uint64_t parse_u64(const std::string& v, std::size_t line, const std::string& key) {
    if (!v.empty() && v[0] == '-')
        fail(line, "key '" + key + "' expects a nonnegative integer, got '" + v + "'");
    std::uint64_t out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        fail(line, "key '" + key + "' expects an integer, got '" + v + "'");
    return out;
}

double parse_real(const std::string& v, std::size_t line, const std::string& key) {
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        return out;
    } catch (const std::exception&) {
        fail(line, "key '" + key + "' expects a real number, got '" + v + "'");
    }
}

std::vector<OpKind> parse_ops(const std::string& v, std::size_t line) {
    std::vector<OpKind> ops;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) fail(line, "empty op name in 'space.ops'");
        try {
            ops.push_back(op_from_name(tok));
        } catch (const ConfigError& e) {
            fail(line, e.what());
        }
    }
    if (ops.empty()) fail(line, "'space.ops' must list at least one op");
    return ops;
}

ScheduleStyle parse_style(const std::string& v, std::size_t line, const std::string& key) {
    if (v == "increase") return ScheduleStyle::Increase;
    if (v == "decrease") return ScheduleStyle::Decrease;
    fail(line, "key '" + key + "' expects increase|decrease, got '" + v + "'");
}

const char* style_name(ScheduleStyle s) {
    return s == ScheduleStyle::Increase ? "increase" : "decrease";
}

std::string ops_to_string(const std::vector<OpKind>& ops) {
    std::string s;
    for (std::size_t i = 0; i < ops.size(); ++i) {
        if (i) s += ',';
        s += op_name(ops[i]);
    }
    return s;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (base_lr <= 0.0) throw ConfigError("train.base_lr must be > 0");
    if (min_lr < 0.0 || min_lr > base_lr)
        throw ConfigError("train.min_lr must be in [0, base_lr]");
    if (momentum < 0.0 || momentum >= 1.0)
        throw ConfigError("train.momentum must be in [0, 1)");
    if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
}

void DataConfig::validate() const {
    if (source != "synthetic" && source != "idx")
        throw ConfigError("data.source must be synthetic|idx");
    if (source == "synthetic") {
        if (n_train_per_class < 1 || n_eval_per_class < 1)
            throw ConfigError("data.n_train_per_class and n_eval_per_class must be >= 1");
        if (separation < 0.0 || noise < 0.0)
            throw ConfigError("data.separation and data.noise must be >= 0");
    } else {
        if (train_images.empty() || train_labels.empty() || eval_images.empty() ||
            eval_labels.empty())
            throw ConfigError("data.source=idx requires all four data.*_images/labels paths");
    }
}

void SearchConfig::validate() const {
    if (strategy != "random" && strategy != "evolution")
        throw ConfigError("search.strategy must be random|evolution");
    if (rounds < 1) throw ConfigError("search.rounds must be >= 1");
    if (population < 1) throw ConfigError("search.population must be >= 1");
    if (strategy == "evolution") {
        if (population < 2) throw ConfigError("search.population must be >= 2 for evolution");
        if (n_mutate + n_crossover > population)
            throw ConfigError("search.n_mutate + search.n_crossover must be <= population");
        if (n_mutate + n_crossover == 0)
            throw ConfigError("evolution needs n_mutate + n_crossover >= 1");
    }
    if (mutation_rate < 0.0 || mutation_rate > 1.0)
        throw ConfigError("search.mutation_rate must be in [0,1]");
}

RunConfig RunConfig::defaults() {
    RunConfig c;
    c.spec = CellSpec::make(4, {OpKind::Skip, OpKind::Linear}, 16, 16, 4);
    return c;
}

void RunConfig::validate() const {
    spec.validate();
    data.validate();
    train.validate();
    search.validate();
    if (oracle.epochs < 1 || oracle.batch_size < 1)
        throw ConfigError("oracle.epochs and oracle.batch_size must be >= 1");
    if (eval.k_frac <= 0.0 || eval.k_frac > 1.0)
        throw ConfigError("eval.k_frac must be in (0,1]");
    if (eval.threads < 1) throw ConfigError("eval.threads must be >= 1");
}

std::map<std::string, std::string> RunConfig::resolved() const {
    std::map<std::string, std::string> m;
    m["label"] = label;
    m["space.n_nodes"] = std::to_string(spec.n_nodes);
    m["space.ops"] = ops_to_string(spec.ops);
    m["space.hidden_dim"] = std::to_string(spec.hidden_dim);
    m["space.d_in"] = std::to_string(spec.d_in);
    m["space.n_classes"] = std::to_string(spec.n_classes);
    m["space.enum_cap"] = std::to_string(spec.enumeration_cap);
    m["data.source"] = data.source;
    m["data.n_train_per_class"] = std::to_string(data.n_train_per_class);
    m["data.n_eval_per_class"] = std::to_string(data.n_eval_per_class);
    m["data.separation"] = format_double(data.separation);
    m["data.noise"] = format_double(data.noise);
    m["data.seed"] = std::to_string(data.seed);
    m["data.train_images"] = data.train_images;
    m["data.train_labels"] = data.train_labels;
    m["data.eval_images"] = data.eval_images;
    m["data.eval_labels"] = data.eval_labels;
    m["data.normalize"] = data.normalize ? "true" : "false";
    m["train.epochs"] = std::to_string(train.epochs);
    m["train.batch_size"] = std::to_string(train.batch_size);
    m["train.base_lr"] = format_double(train.base_lr);
    m["train.min_lr"] = format_double(train.min_lr);
    m["train.momentum"] = format_double(train.momentum);
    m["train.weight_decay"] = format_double(train.weight_decay);
    m["train.master_seed"] = std::to_string(train.master_seed);
    m["pa.enabled"] = train.pa.enabled ? "true" : "false";
    m["pa.update_freq"] =
        train.pa.update_freq == UpdateFreq::PerEpoch ? "per_epoch" : "per_step";
    m["pa.style"] = style_name(train.pa.style);
    m["pa.reweight"] = train.pa.reweight ? "true" : "false";
    m["da.enabled"] = train.da.enabled ? "true" : "false";
    m["da.style"] = style_name(train.da.style);
    m["da.granularity"] =
        train.da.granularity == Granularity::Instance ? "instance" : "class";
    m["gv.scope"] = train.gv_scope == GvScope::CandidateOps ? "candidate_ops" : "all";
    m["search.strategy"] = search.strategy;
    m["search.rounds"] = std::to_string(search.rounds);
    m["search.population"] = std::to_string(search.population);
    m["search.n_mutate"] = std::to_string(search.n_mutate);
    m["search.n_crossover"] = std::to_string(search.n_crossover);
    m["search.mutation_rate"] = format_double(search.mutation_rate);
    m["search.param_budget"] = std::to_string(search.param_budget);
    m["search.eval_subset_size"] = std::to_string(search.eval_subset_size);
    m["oracle.epochs"] = std::to_string(oracle.epochs);
    m["oracle.batch_size"] = std::to_string(oracle.batch_size);
    m["oracle.base_lr"] = format_double(oracle.base_lr);
    m["oracle.min_lr"] = format_double(oracle.min_lr);
    m["oracle.momentum"] = format_double(oracle.momentum);
    m["oracle.weight_decay"] = format_double(oracle.weight_decay);
    m["eval.k_frac"] = format_double(eval.k_frac);
    m["eval.threads"] = std::to_string(eval.threads);
    return m;
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg = RunConfig::defaults();
    std::map<std::string, std::size_t> seen;  // key -> first line

    // one handler per key; table-driven so unknown keys are trivially
    // detectable and the resolved echo stays in sync
    using Handler = std::function<void(const std::string&, std::size_t)>;
    std::map<std::string, Handler> handlers;

    handlers["label"] = [&](const std::string& v, std::size_t) { cfg.label = v; };
    handlers["space.n_nodes"] = [&](const std::string& v, std::size_t ln) {
        cfg.spec.n_nodes = parse_u64(v, ln, "space.n_nodes");
    };
    handlers["space.ops"] = [&](const std::string& v, std::size_t ln) {
        cfg.spec.ops = parse_ops(v, ln);
    };
    handlers["space.hidden_dim"] = [&](const std::string& v, std::size_t ln) {
        cfg.spec.hidden_dim = parse_u64(v, ln, "space.hidden_dim");
    };
    handlers["space.d_in"] = [&](const std::string& v, std::size_t ln) {
        cfg.spec.d_in = parse_u64(v, ln, "space.d_in");
    };
    handlers["space.n_classes"] = [&](const std::string& v, std::size_t ln) {
        cfg.spec.n_classes = parse_u64(v, ln, "space.n_classes");
    };
    handlers["space.enum_cap"] = [&](const std::string& v, std::size_t ln) {
        cfg.spec.enumeration_cap = parse_u64(v, ln, "space.enum_cap");
    };
    handlers["data.source"] = [&](const std::string& v, std::size_t) {
        cfg.data.source = v;
    };
    handlers["data.n_train_per_class"] = [&](const std::string& v, std::size_t ln) {
        cfg.data.n_train_per_class = parse_u64(v, ln, "data.n_train_per_class");
    };
    handlers["data.n_eval_per_class"] = [&](const std::string& v, std::size_t ln) {
        cfg.data.n_eval_per_class = parse_u64(v, ln, "data.n_eval_per_class");
    };
    handlers["data.separation"] = [&](const std::string& v, std::size_t ln) {
        cfg.data.separation = parse_real(v, ln, "data.separation");
    };
    handlers["data.noise"] = [&](const std::string& v, std::size_t ln) {
        cfg.data.noise = parse_real(v, ln, "data.noise");
    };
    handlers["data.seed"] = [&](const std::string& v, std::size_t ln) {
        cfg.data.seed = parse_u64(v, ln, "data.seed");
    };
    handlers["data.train_images"] = [&](const std::string& v, std::size_t) {
        cfg.data.train_images = v;
    };
    handlers["data.train_labels"] = [&](const std::string& v, std::size_t) {
        cfg.data.train_labels = v;
    };
    handlers["data.eval_images"] = [&](const std::string& v, std::size_t) {
        cfg.data.eval_images = v;
    };
    handlers["data.eval_labels"] = [&](const std::string& v, std::size_t) {
        cfg.data.eval_labels = v;
    };
    handlers["data.normalize"] = [&](const std::string& v, std::size_t ln) {
        cfg.data.normalize = parse_bool(v, ln, "data.normalize");
    };
    handlers["train.epochs"] = [&](const std::string& v, std::size_t ln) {
        cfg.train.epochs = parse_u64(v, ln, "train.epochs");
    };
    handlers["train.batch_size"] = [&](const std::string& v, std::size_t ln) {
        cfg.train.batch_size = parse_u64(v, ln, "train.batch_size");
    };
    handlers["train.base_lr"] = [&](const std::string& v, std::size_t ln) {
        cfg.train.base_lr = parse_real(v, ln, "train.base_lr");
    };
    handlers["train.min_lr"] = [&](const std::string& v, std::size_t ln) {
        cfg.train.min_lr = parse_real(v, ln, "train.min_lr");
    };
    handlers["train.momentum"] = [&](const std::string& v, std::size_t ln) {
        cfg.train.momentum = parse_real(v, ln, "train.momentum");
    };
    handlers["train.weight_decay"] = [&](const std::string& v, std::size_t ln) {
        cfg.train.weight_decay = parse_real(v, ln, "train.weight_decay");
    };
    handlers["train.master_seed"] = [&](const std::string& v, std::size_t ln) {
        cfg.train.master_seed = parse_u64(v, ln, "train.master_seed");
    };
    handlers["pa.enabled"] = [&](const std::string& v, std::size_t ln) {
        cfg.train.pa.enabled = parse_bool(v, ln, "pa.enabled");
    };
    handlers["pa.update_freq"] = [&](const std::string& v, std::size_t ln) {
        if (v == "per_epoch")
            cfg.train.pa.update_freq = UpdateFreq::PerEpoch;
        else if (v == "per_step")
            cfg.train.pa.update_freq = UpdateFreq::PerStep;
        else
            fail(ln, "pa.update_freq expects per_epoch|per_step, got '" + v + "'");
    };
    handlers["pa.style"] = [&](const std::string& v, std::size_t ln) {
        cfg.train.pa.style = parse_style(v, ln, "pa.style");
    };
    handlers["pa.reweight"] = [&](const std::string& v, std::size_t ln) {
        cfg.train.pa.reweight = parse_bool(v, ln, "pa.reweight");
    };
    handlers["da.enabled"] = [&](const std::string& v, std::size_t ln) {
        cfg.train.da.enabled = parse_bool(v, ln, "da.enabled");
    };
    handlers["da.style"] = [&](const std::string& v, std::size_t ln) {
        cfg.train.da.style = parse_style(v, ln, "da.style");
    };
    handlers["da.granularity"] = [&](const std::string& v, std::size_t ln) {
        if (v == "instance")
            cfg.train.da.granularity = Granularity::Instance;
        else if (v == "class")
            cfg.train.da.granularity = Granularity::Class;
        else
            fail(ln, "da.granularity expects instance|class, got '" + v + "'");
    };
    handlers["gv.scope"] = [&](const std::string& v, std::size_t ln) {
        if (v == "candidate_ops")
            cfg.train.gv_scope = GvScope::CandidateOps;
        else if (v == "all")
            cfg.train.gv_scope = GvScope::All;
        else
            fail(ln, "gv.scope expects candidate_ops|all, got '" + v + "'");
    };
    handlers["search.strategy"] = [&](const std::string& v, std::size_t) {
        cfg.search.strategy = v;
    };
    handlers["search.rounds"] = [&](const std::string& v, std::size_t ln) {
        cfg.search.rounds = parse_u64(v, ln, "search.rounds");
    };
    handlers["search.population"] = [&](const std::string& v, std::size_t ln) {
        cfg.search.population = parse_u64(v, ln, "search.population");
    };
    handlers["search.n_mutate"] = [&](const std::string& v, std::size_t ln) {
        cfg.search.n_mutate = parse_u64(v, ln, "search.n_mutate");
    };
    handlers["search.n_crossover"] = [&](const std::string& v, std::size_t ln) {
        cfg.search.n_crossover = parse_u64(v, ln, "search.n_crossover");
    };
    handlers["search.mutation_rate"] = [&](const std::string& v, std::size_t ln) {
        cfg.search.mutation_rate = parse_real(v, ln, "search.mutation_rate");
    };
    handlers["search.param_budget"] = [&](const std::string& v, std::size_t ln) {
        cfg.search.param_budget = parse_u64(v, ln, "search.param_budget");
    };
    handlers["search.eval_subset_size"] = [&](const std::string& v, std::size_t ln) {
        cfg.search.eval_subset_size = parse_u64(v, ln, "search.eval_subset_size");
    };
    handlers["oracle.epochs"] = [&](const std::string& v, std::size_t ln) {
        cfg.oracle.epochs = parse_u64(v, ln, "oracle.epochs");
    };
    handlers["oracle.batch_size"] = [&](const std::string& v, std::size_t ln) {
        cfg.oracle.batch_size = parse_u64(v, ln, "oracle.batch_size");
    };
    handlers["oracle.base_lr"] = [&](const std::string& v, std::size_t ln) {
        cfg.oracle.base_lr = parse_real(v, ln, "oracle.base_lr");
    };
    handlers["oracle.min_lr"] = [&](const std::string& v, std::size_t ln) {
        cfg.oracle.min_lr = parse_real(v, ln, "oracle.min_lr");
    };
    handlers["oracle.momentum"] = [&](const std::string& v, std::size_t ln) {
        cfg.oracle.momentum = parse_real(v, ln, "oracle.momentum");
    };
    handlers["oracle.weight_decay"] = [&](const std::string& v, std::size_t ln) {
        cfg.oracle.weight_decay = parse_real(v, ln, "oracle.weight_decay");
    };
    handlers["eval.k_frac"] = [&](const std::string& v, std::size_t ln) {
        cfg.eval.k_frac = parse_real(v, ln, "eval.k_frac");
    };
    handlers["eval.threads"] = [&](const std::string& v, std::size_t ln) {
        cfg.eval.threads = parse_u64(v, ln, "eval.threads");
    };

    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(line_no, "empty key");
        auto hit = handlers.find(key);
        if (hit == handlers.end()) fail(line_no, "unknown key '" + key + "'");
        auto [sit, fresh] = seen.emplace(key, line_no);
        if (!fresh)
            fail(line_no, "duplicate key '" + key + "' (first set at line " +
                              std::to_string(sit->second) + ")");
        hit->second(value, line_no);
    }

    // rebuild the edge list for whatever topology the file settled on
    const std::size_t cap = cfg.spec.enumeration_cap;
    cfg.spec = CellSpec::make(cfg.spec.n_nodes, cfg.spec.ops, cfg.spec.hidden_dim,
                              cfg.spec.d_in, cfg.spec.n_classes);
    cfg.spec.enumeration_cap = cap;

    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();

    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        // run manifest: reconstruct the flat config from its echo
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw IoError("manifest parse error in " + path + ": " + e.what());
        }
        if (!j.contains("config") || !j["config"].is_object())
            throw IoError("manifest " + path + " has no 'config' object");
        std::string flat;
        for (const auto& [k, v] : j["config"].items()) {
            if (!v.is_string())
                throw IoError("manifest " + path + ": config value for '" + k +
                              "' is not a string");
            const std::string sv = v.get<std::string>();
            if (sv.empty()) continue;  // unset optional values
            flat += k + " = " + sv + "\n";
        }
        return parse_config_text(flat);
    }
    return parse_config_text(text);
}

}  // namespace pada
