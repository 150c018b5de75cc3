#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pada/dataset.hpp"
#include "pada/supernet.hpp"

namespace pada {

// Fraction of rows whose argmax logit hits the label. Ties go to the
// lowest class index (deterministic).
double accuracy(const Tensor& logits, const std::vector<std::size_t>& labels);

// Inherited-weight accuracy of every path on the eval set. Paths may be
// evaluated by a worker pool (supernet is read-only here); results are
// written by path index so the output order never depends on timing.
std::vector<double> evaluate_all(const Supernet& net, const std::vector<Path>& paths,
                                 const Dataset& eval_data, std::size_t n_threads = 1);

// Kendall tau-a with ties excluded from the numerator:
// (concordant - discordant) / (n(n-1)/2). O(n log n) via merge-sort
// inversion counting.
double kendall_tau(const std::vector<double>& a, const std::vector<double>& b);

// Indices of the k largest scores, descending; equal scores keep their
// enumeration order (stable).
std::vector<std::size_t> topk_indices(const std::vector<double>& scores, std::size_t k);

// |topk(pred) ∩ topk(truth)| / k with k = max(1, floor(k_frac * n)).
double precision_at_topk(const std::vector<double>& pred,
                         const std::vector<double>& truth, double k_frac);

// Budget for ground-truth standalone trainings.
struct OracleConfig {
    std::size_t epochs = 60;
    std::size_t batch_size = 64;
    double base_lr = 0.05;
    double min_lr = 0.0;
    double momentum = 0.9;
    double weight_decay = 1e-4;
};

// Trains a fresh model containing only this path's ops (plus stem and
// classifier) from scratch — uniform shuffled data, cosine lr — and
// returns its final eval accuracy. Fully determined by the seed; throws
// NumericError naming the path and step if the loss goes non-finite.
double train_standalone_oracle(const CellSpec& spec, const Path& path,
                               const Dataset& train_data, const Dataset& eval_data,
                               const OracleConfig& cfg, std::uint64_t seed);

// Consistency summary between supernet-predicted and ground-truth
// scores over the same path list.
struct RankingReport {
    std::vector<std::string> path_strings;
    std::vector<double> supernet_acc;
    std::vector<double> truth_acc;
    double kt = 0.0;
    double p_at_topk = 0.0;
    double k_frac = 0.05;
    std::uint64_t seed = 0;
    std::string timestamp;  // informational; excluded from byte-determinism
};

RankingReport make_ranking_report(const std::vector<Path>& paths,
                                  const std::vector<double>& supernet_acc,
                                  const std::vector<double>& truth_acc, double k_frac,
                                  std::uint64_t seed);

}  // namespace pada
