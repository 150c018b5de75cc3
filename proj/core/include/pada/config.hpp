#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pada/ranking.hpp"
#include "pada/sampling.hpp"
#include "pada/search_space.hpp"
#include "pada/variance_stats.hpp"

namespace pada {

struct PaConfig {
    bool enabled = true;
    UpdateFreq update_freq = UpdateFreq::PerEpoch;
    ScheduleStyle style = ScheduleStyle::Increase;
    bool reweight = false;
};

struct DaConfig {
    bool enabled = true;
    ScheduleStyle style = ScheduleStyle::Increase;
    Granularity granularity = Granularity::Instance;
};

struct TrainConfig {
    std::size_t epochs = 60;
    std::size_t batch_size = 64;
    double base_lr = 0.05;
    double min_lr = 0.0;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    PaConfig pa;
    DaConfig da;
    std::uint64_t master_seed = 1;
    GvScope gv_scope = GvScope::CandidateOps;

    void validate() const;
};

struct DataConfig {
    std::string source = "synthetic";  // synthetic | idx
    std::size_t n_train_per_class = 512;
    std::size_t n_eval_per_class = 128;
    double separation = 3.0;
    double noise = 1.0;
    std::uint64_t seed = 1234;
    std::string train_images, train_labels, eval_images, eval_labels;
    bool normalize = true;

    void validate() const;
};

struct SearchConfig {
    std::string strategy = "evolution";  // random | evolution
    std::size_t rounds = 20;             // generations / search rounds
    std::size_t population = 50;         // evolution pop; random candidates/round
    std::size_t n_mutate = 25;
    std::size_t n_crossover = 25;
    double mutation_rate = 0.2;
    std::size_t param_budget = 0;        // 0 = unconstrained
    std::size_t eval_subset_size = 0;    // 0 = full eval set

    void validate() const;
};

struct EvalConfig {
    double k_frac = 0.05;
    std::size_t threads = 1;
};

// Everything one run needs, resolvable from a flat dotted-key text file
// or from a previously written run manifest.
struct RunConfig {
    std::string label = "run";
    CellSpec spec;
    DataConfig data;
    TrainConfig train;
    SearchConfig search;
    OracleConfig oracle;
    EvalConfig eval;

    static RunConfig defaults();
    void validate() const;

    // All keys with their resolved values, sorted by key — echoed into
    // the run manifest so a manifest can stand in for the config file.
    std::map<std::string, std::string> resolved() const;
};

// Parses flat `key = value` lines (# starts a comment). Unknown keys,
// duplicates, type errors, and range errors are ConfigErrors naming the
// line number. An empty file yields the documented defaults.
RunConfig parse_config_text(const std::string& text);

// Loads a config file; a file whose first non-space byte is '{' is
// treated as a run manifest and its embedded config is used instead.
RunConfig load_run_config(const std::string& path);

}  // namespace pada
