// Command-line surface for the supernet laboratory: data generation,
// supernet training, ground-truth oracle, ranking evaluation, sub-model
// search, and multi-seed aggregation.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "pada/artifacts.hpp"
#include "pada/csvfmt.hpp"
#include "pada/checkpoint.hpp"
#include "pada/config.hpp"
#include "pada/dataset.hpp"
#include "pada/errors.hpp"
#include "pada/ranking.hpp"
#include "pada/search.hpp"
#include "pada/trainer.hpp"

namespace fs = std::filesystem;
using namespace pada;

namespace {

RunConfig config_from(const std::string& config_path) {
    if (config_path.empty()) {
        RunConfig cfg = RunConfig::defaults();
        cfg.validate();
        return cfg;
    }
    return load_run_config(config_path);
}

SyntheticSplit datasets_from(const RunConfig& cfg) {
    if (cfg.data.source == "synthetic") {
        return generate_synthetic_split(cfg.data.n_train_per_class,
                                        cfg.data.n_eval_per_class, cfg.spec.n_classes,
                                        cfg.spec.d_in, cfg.data.separation,
                                        cfg.data.noise, cfg.data.seed);
    }
    SyntheticSplit s;
    s.train = load_idx(cfg.data.train_images, cfg.data.train_labels, 0,
                       cfg.data.normalize);
    s.train.split = "train";
    s.eval = load_idx(cfg.data.eval_images, cfg.data.eval_labels, 0,
                      cfg.data.normalize);
    s.eval.split = "eval";
    if (s.train.d_in() != cfg.spec.d_in || s.eval.d_in() != cfg.spec.d_in)
        throw ConfigError("IDX input width " + std::to_string(s.train.d_in()) +
                          " does not match space.d_in " + std::to_string(cfg.spec.d_in));
    return s;
}

std::string now_stamp() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir) {
    const RunConfig cfg = config_from(config_path);
    if (cfg.data.source != "synthetic")
        throw UsageError("gen-data only makes sense with data.source=synthetic");
    const SyntheticSplit split = datasets_from(cfg);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    std::map<std::string, std::string> arts = {
        {"train_images", (dir / "train-images.idx").string()},
        {"train_labels", (dir / "train-labels.idx").string()},
        {"eval_images", (dir / "eval-images.idx").string()},
        {"eval_labels", (dir / "eval-labels.idx").string()},
    };
    write_text_file((dir / "manifest.json").string(),
                    manifest_json("gen-data", cfg, split.train.fingerprint(), arts));
    save_idx(split.train, arts["train_images"], arts["train_labels"]);
    save_idx(split.eval, arts["eval_images"], arts["eval_labels"]);
    std::cout << "wrote " << split.train.n() << " train / " << split.eval.n()
              << " eval samples to " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              const std::string& resume_path, std::size_t stop_after) {
    const RunConfig cfg = config_from(config_path);
    const SyntheticSplit data = datasets_from(cfg);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    std::map<std::string, std::string> arts = {
        {"metrics_csv", (dir / "metrics.csv").string()},
        {"checkpoint", (dir / "supernet.ckpt").string()},
        {"path_dist_csv", (dir / "path_dist.csv").string()},
        {"data_dist_csv", (dir / "data_dist.csv").string()},
    };
    write_text_file((dir / "manifest.json").string(),
                    manifest_json("train-supernet", cfg, data.train.fingerprint(), arts));

    SupernetTrainer trainer =
        resume_path.empty()
            ? SupernetTrainer(cfg.spec, cfg.train, data.train)
            : SupernetTrainer::resume_from_checkpoint(resume_path, cfg.spec, cfg.train,
                                                      data.train);
    const std::size_t first_epoch = trainer.epochs_done();
    const std::size_t until =
        stop_after ? std::min(stop_after, cfg.train.epochs) : cfg.train.epochs;
    while (trainer.epochs_done() < until) trainer.run_epoch();

    // fresh runs write the full CSV; resumed runs append their own rows
    // to an existing file so the concatenation equals the one-shot run
    std::string csv;
    if (!resume_path.empty() && fs::exists(arts["metrics_csv"])) {
        csv = read_text_file(arts["metrics_csv"]);
        for (const MetricsRow& r : trainer.history()) csv += metrics_row_csv(r) + "\n";
    } else {
        csv = metrics_history_csv(trainer.history());
    }
    write_text_file(arts["metrics_csv"], csv);
    trainer.save_checkpoint(arts["checkpoint"]);
    write_text_file(arts["path_dist_csv"], path_dist_csv(trainer.path_dist()));
    write_text_file(arts["data_dist_csv"], data_dist_csv(trainer.data_dist()));

    std::cout << "trained epochs " << first_epoch << ".."
              << (trainer.epochs_done() - 1) << "; artifacts in " << out_dir << "\n";
    return 0;
}

int cmd_oracle(const std::string& config_path, const std::string& out_dir,
               std::size_t threads_override) {
    const RunConfig cfg = config_from(config_path);
    const SyntheticSplit data = datasets_from(cfg);
    const std::vector<Path> paths = enumerate_paths(cfg.spec);
    const std::size_t n_threads =
        threads_override ? threads_override : cfg.eval.threads;

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    std::map<std::string, std::string> arts = {
        {"ground_truth_csv", (dir / "ground_truth.csv").string()},
    };
    write_text_file((dir / "manifest.json").string(),
                    manifest_json("oracle", cfg, data.train.fingerprint(), arts));

    std::vector<double> acc(paths.size(), 0.0);
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= paths.size()) break;
            acc[i] = train_standalone_oracle(cfg.spec, paths[i], data.train, data.eval,
                                             cfg.oracle, cfg.train.master_seed);
        }
    };
    if (n_threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    std::vector<GroundTruthRow> rows;
    rows.reserve(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i)
        rows.push_back({paths[i].to_string(), acc[i], cfg.train.master_seed});
    write_text_file(arts["ground_truth_csv"], ground_truth_csv(rows));
    std::cout << "trained " << paths.size() << " standalone models; table in "
              << arts["ground_truth_csv"] << "\n";
    return 0;
}

int cmd_eval_ranking(const std::string& config_path, const std::string& ckpt_path,
                     const std::string& truth_path, const std::string& out_path) {
    const RunConfig cfg = config_from(config_path);
    const SyntheticSplit data = datasets_from(cfg);
    const Supernet net = supernet_from_checkpoint(ckpt_path, cfg.spec);
    const std::vector<Path> paths = enumerate_paths(cfg.spec);

    const auto truth_rows =
        parse_ground_truth_csv(read_text_file(truth_path), truth_path);
    if (truth_rows.size() != paths.size())
        throw UsageError("ground-truth table has " + std::to_string(truth_rows.size()) +
                         " rows but the space enumerates " +
                         std::to_string(paths.size()) + " paths");
    std::vector<double> truth(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        if (truth_rows[i].path != paths[i].to_string())
            throw UsageError("ground-truth row " + std::to_string(i + 2) +
                             " is path '" + truth_rows[i].path + "', expected '" +
                             paths[i].to_string() + "' (enumeration order)");
        truth[i] = truth_rows[i].accuracy;
    }

    const std::vector<double> pred =
        evaluate_all(net, paths, data.eval, cfg.eval.threads);
    RankingReport report = make_ranking_report(paths, pred, truth, cfg.eval.k_frac,
                                               cfg.train.master_seed);
    report.timestamp = now_stamp();
    write_text_file(out_path, ranking_report_text(report));
    std::cout << "kendall_tau=" << format_double(report.kt)
              << " p_at_topk=" << format_double(report.p_at_topk) << " -> " << out_path
              << "\n";
    return 0;
}

int cmd_search(const std::string& config_path, const std::string& ckpt_path,
               const std::string& out_path) {
    const RunConfig cfg = config_from(config_path);
    const SyntheticSplit data = datasets_from(cfg);
    const Supernet net = supernet_from_checkpoint(ckpt_path, cfg.spec);
    RngStream rng(cfg.train.master_seed, "search");

    const SearchOutcome out = cfg.search.strategy == "random"
                                  ? random_search(net, cfg.search, data.eval, rng)
                                  : evolutionary_search(net, cfg.search, data.eval, rng);

    std::ostringstream txt;
    txt << "best_path " << out.best.to_string() << "\n";
    txt << "score " << format_double(out.score) << "\n";
    txt << "evaluated " << out.evaluated << "\n";
    txt << "strategy " << cfg.search.strategy << "\n";
    write_text_file(out_path, txt.str());
    std::cout << "best " << out.best.to_string() << " score "
              << format_double(out.score) << " -> " << out_path << "\n";
    return 0;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// pulls "  kendall_tau: <x>" style fields out of a ranking report
double report_field(const std::string& text, const std::string& field,
                    const std::string& origin) {
    const std::string needle = field + ": ";
    const auto at = text.find(needle);
    if (at == std::string::npos)
        throw IoError(origin + ": no '" + field + "' field found");
    return std::stod(text.substr(at + needle.size()));
}

// mean gv over the last quarter of a metrics CSV's epochs
double last_quarter_gv(const std::string& csv, const std::string& origin) {
    std::istringstream in(csv);
    std::string line;
    std::vector<double> gv;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        std::size_t field = 0, at = 0;
        while (field < 3) {
            at = line.find(',', at);
            if (at == std::string::npos)
                throw IoError(origin + ": malformed metrics row '" + line + "'");
            ++at;
            ++field;
        }
        gv.push_back(std::stod(line.substr(at)));
    }
    if (gv.empty()) throw IoError(origin + ": no metrics rows");
    const std::size_t q = std::max<std::size_t>(1, gv.size() / 4);
    std::vector<double> tail(gv.end() - static_cast<std::ptrdiff_t>(q), gv.end());
    return mean_of(tail);
}

int cmd_report(const std::string& label, const std::vector<std::string>& report_files,
               const std::vector<std::string>& metrics_files,
               const std::string& out_path, bool append) {
    if (report_files.empty() && metrics_files.empty())
        throw UsageError("report: provide --reports and/or --metrics files");

    std::vector<double> kts, ptops, gvs;
    for (const std::string& f : report_files) {
        const std::string text = read_text_file(f);
        kts.push_back(report_field(text, "kendall_tau", f));
        ptops.push_back(report_field(text, "p_at_topk", f));
    }
    for (const std::string& f : metrics_files)
        gvs.push_back(last_quarter_gv(read_text_file(f), f));

    const std::string header =
        "label,n_reports,kt_mean,kt_std,ptopk_mean,ptopk_std,n_metrics,gv_last_quarter_"
        "mean,gv_last_quarter_std";
    std::string row = label + ',' + std::to_string(report_files.size());
    auto cell = [](const std::vector<double>& v, auto f) {
        return v.empty() ? std::string("") : format_double(f(v));
    };
    row += ',' + cell(kts, mean_of) + ',' + cell(kts, std_of);
    row += ',' + cell(ptops, mean_of) + ',' + cell(ptops, std_of);
    row += ',' + std::to_string(metrics_files.size());
    row += ',' + cell(gvs, mean_of) + ',' + cell(gvs, std_of);

    std::string out;
    if (append && fs::exists(out_path)) {
        out = read_text_file(out_path);
        if (out.empty() || out.rfind(header, 0) != 0) out = header + "\n";
    } else {
        out = header + "\n";
    }
    out += row + "\n";
    write_text_file(out_path, out);
    std::cout << row << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weight-sharing supernet laboratory: importance-sampled training, "
                 "gradient-variance tracking, and ranking-consistency evaluation"};
    app.require_subcommand(1);

    std::string config_path, out_dir, resume_path, ckpt_path, truth_path, out_path;
    std::size_t threads = 0;

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset as IDX files");
    gen->add_option("--config", config_path, "config file or run manifest");
    gen->add_option("--out-dir", out_dir, "output directory")->required();

    std::size_t stop_after = 0;
    auto* train = app.add_subcommand("train-supernet", "Train the shared-weight supernet");
    train->add_option("--config", config_path, "config file or run manifest");
    train->add_option("--out-dir", out_dir, "output directory")->required();
    train->add_option("--resume", resume_path, "checkpoint to continue from");
    train->add_option("--stop-after", stop_after,
                      "pause after this epoch (checkpoint can be resumed later)");

    auto* oracle = app.add_subcommand(
        "oracle", "Train every sub-model standalone to build the ground-truth table");
    oracle->add_option("--config", config_path, "config file or run manifest");
    oracle->add_option("--out-dir", out_dir, "output directory")->required();
    oracle->add_option("--threads", threads, "worker threads (default eval.threads)");

    auto* evalr = app.add_subcommand(
        "eval-ranking", "Score ranking consistency of a checkpoint against ground truth");
    evalr->add_option("--config", config_path, "config file or run manifest");
    evalr->add_option("--checkpoint", ckpt_path, "trained supernet checkpoint")->required();
    evalr->add_option("--truth", truth_path, "ground-truth CSV from `oracle`")->required();
    evalr->add_option("--out", out_path, "report file")->required();

    auto* search = app.add_subcommand("search", "Search sub-models over a trained supernet");
    search->add_option("--config", config_path, "config file or run manifest");
    search->add_option("--checkpoint", ckpt_path, "trained supernet checkpoint")->required();
    search->add_option("--out", out_path, "result file")->required();

    std::string label = "run";
    std::vector<std::string> report_files, metrics_files;
    bool append = false;
    auto* report = app.add_subcommand(
        "report", "Aggregate multi-seed reports/metrics into a mean±std table row");
    report->add_option("--label", label, "row label");
    report->add_option("--reports", report_files, "ranking report files");
    report->add_option("--metrics", metrics_files, "metrics CSV files");
    report->add_option("--out", out_path, "summary CSV")->required();
    report->add_flag("--append", append, "append to an existing summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);  // 0 for --help, nonzero for usage errors
    }

    try {
        if (gen->parsed()) return cmd_gen_data(config_path, out_dir);
        if (train->parsed())
            return cmd_train(config_path, out_dir, resume_path, stop_after);
        if (oracle->parsed()) return cmd_oracle(config_path, out_dir, threads);
        if (evalr->parsed())
            return cmd_eval_ranking(config_path, ckpt_path, truth_path, out_path);
        if (search->parsed()) return cmd_search(config_path, ckpt_path, out_path);
        if (report->parsed())
            return cmd_report(label, report_files, metrics_files, out_path, append);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
