#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pada/config.hpp"
#include "pada/dataset.hpp"
#include "pada/sampling.hpp"
#include "pada/supernet.hpp"
#include "pada/variance_stats.hpp"

namespace pada {

// One metrics CSV row. delta/tau are the smoothing values in force
// DURING the epoch (the end-of-epoch update publishes the next epoch's
// values); gv is the per-epoch tracker's scalar, or 0 when no in-scope
// parameter was recorded twice that epoch.
struct MetricsRow {
    std::size_t epoch = 0;
    std::size_t step_count = 0;  // cumulative optimizer steps
    double mean_loss = 0.0;
    double gv = 0.0;
    double delta = 0.0;
    double tau = 0.0;
    double lr = 0.0;
};

std::string metrics_csv_header();
std::string metrics_row_csv(const MetricsRow& row);
std::string metrics_history_csv(const std::vector<MetricsRow>& history);

// Index batches for one epoch drawn with replacement from the data
// distribution: ceil(n/batch) batches, draw order preserved.
std::vector<std::vector<std::size_t>> epoch_data_plan(DataDistribution& dist,
                                                      std::size_t n_samples,
                                                      std::size_t batch_size,
                                                      RngStream& rng);

// The full training loop: per step, sample a path, run one SGD step on
// its weights, record gradient norms for the path distribution, record
// per-sample importance for the data distribution, and track gradient
// variance; per epoch, advance the smoothing schedules and republish
// both distributions. With pa and da disabled this is exactly the
// uniform single-path baseline (uniform paths, shuffled data without
// replacement).
class SupernetTrainer {
  public:
    SupernetTrainer(const CellSpec& spec, const TrainConfig& cfg,
                    const Dataset& train_data);

    void run_epoch();
    void run_to_end();  // remaining epochs up to cfg.epochs

    std::size_t epochs_done() const { return epochs_done_; }
    const Supernet& net() const { return net_; }
    const std::vector<MetricsRow>& history() const { return history_; }
    const PathDistribution& path_dist() const { return pdist_; }
    const DataDistribution& data_dist() const { return ddist_; }
    // whole-run gradient-variance aggregate (NumericError if nothing
    // was recorded twice)
    double run_gv() const { return run_tracker_.supernet_gv(); }

    void save_checkpoint(const std::string& path) const;
    // Restores trainer state from a checkpoint; config, spec, and
    // dataset must match what the checkpoint was written with.
    static SupernetTrainer resume_from_checkpoint(const std::string& path,
                                                  const CellSpec& spec,
                                                  const TrainConfig& cfg,
                                                  const Dataset& train_data);

  private:
    struct ResumeTag {};
    SupernetTrainer(ResumeTag, const CellSpec& spec, const TrainConfig& cfg,
                    const Dataset& train_data);

    CellSpec spec_;
    TrainConfig cfg_;
    const Dataset* train_data_;
    Supernet net_;
    OptimizerState opt_;
    PathDistribution pdist_;
    DataDistribution ddist_;
    RngStream path_rng_;
    RngStream data_rng_;
    GradVarTracker run_tracker_;
    std::size_t epochs_done_ = 0;
    std::vector<MetricsRow> history_;
};

// Convenience wrapper: fresh trainer, run all epochs.
struct TrainOutcome {
    Supernet net;
    std::vector<MetricsRow> history;
};
TrainOutcome train_supernet(const CellSpec& spec, const TrainConfig& cfg,
                            const Dataset& train_data);

}  // namespace pada
