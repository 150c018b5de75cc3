#pragma once

#include <cstddef>
#include <vector>

#include "pada/rng.hpp"
#include "pada/search_space.hpp"
#include "pada/tensor.hpp"

namespace pada {

enum class UpdateFreq { PerEpoch, PerStep };
enum class ScheduleStyle { Increase, Decrease };
enum class Granularity { Instance, Class };

// Smoothing coefficient for epoch in [1, total]: increase ramps 0->1
// (epoch/total), decrease ramps 1->0.
double schedule(std::size_t epoch, std::size_t total_epochs, ScheduleStyle style);

// The variance-minimizing sampling weights for arms with gradient norms
// `norms`: p_i = norm_i / sum(norms). All-zero input degenerates to
// uniform. This is the analytic minimizer of sum_i norm_i^2 / p_i over
// the simplex, which the brute-force test checks directly.
std::vector<double> optimal_simplex_weights(const std::vector<double>& norms);

// Floor added to accumulated norms before normalization so no arm's
// probability ever hits hard zero even at full smoothing.
inline constexpr double kEpsFloor = 1e-12;

// Per-edge categorical distribution over candidate ops, plus the
// per-epoch gradient-norm accumulators that drive its updates.
struct PathDistribution {
    std::vector<std::vector<double>> probs;  // [edge][op]
    std::vector<std::vector<double>> accum;  // [edge][op], current epoch
    double delta = 0.0;
    UpdateFreq update_freq = UpdateFreq::PerEpoch;
    ScheduleStyle style = ScheduleStyle::Increase;
    bool reweight = false;

    static PathDistribution uniform(const CellSpec& spec);
    void validate() const;  // simplex check, 1e-9 tolerance
};

// Adds, for each edge's chosen op, the L2 norm over that op's gradient
// tensors (sqrt of the summed squares across all of them). Parameter-free
// ops contribute zero. Gradients must come from a backward on `path`.
void accumulate_path_norms(PathDistribution& dist, const CellSpec& spec,
                           const Path& path, const GradientSet& grads);

// Epoch-end update: delta = schedule(epoch), each edge becomes
// delta * optimal_simplex_weights(accum + floor) + (1-delta) * uniform,
// accumulators reset.
void update_path_distribution(PathDistribution& dist, std::size_t epoch,
                              std::size_t total_epochs);

// Per-step variant (ablation): recompute every edge from the running
// accumulators at the current delta; nothing is reset.
void refresh_path_distribution_from_accum(PathDistribution& dist);

// One categorical draw per edge (inverse-CDF on exactly one uniform
// each); returns the path and the product of the chosen probabilities.
struct SampledPath {
    Path path;
    double probability = 1.0;
};
SampledPath sample_path(const PathDistribution& dist, RngStream& rng);

// Unbiasing factor 1/(N*p(path)) for gradients of a path drawn from
// `dist`, computed as the per-edge product of 1/(K*p_e) so intermediate
// values stay near 1 instead of spanning N.
double reweight_factor(const PathDistribution& dist, const Path& path);

// Row-wise L2 norms of the per-sample last-layer gradient
// (softmax - onehot rows); each value lies in [0, sqrt(2)].
std::vector<double> per_sample_importance(const Tensor& last_layer_grad);

// Per-sample categorical over the training set, with the current epoch's
// accumulated importance and sampled-this-epoch bookkeeping.
struct DataDistribution {
    std::vector<double> probs;
    std::vector<double> accum;
    std::vector<bool> sampled;   // this epoch
    double tau = 0.0;
    ScheduleStyle style = ScheduleStyle::Increase;
    Granularity granularity = Granularity::Instance;
    std::vector<std::size_t> class_of;  // per sample, used in class mode
    std::size_t n_classes = 0;

    static DataDistribution uniform(std::size_t n_samples,
                                    std::vector<std::size_t> class_of,
                                    std::size_t n_classes);
    void validate() const;
};

// Adds batch importances into the accumulators at their dataset indices.
void accumulate_data_norms(DataDistribution& dist, const Batch& batch,
                           const std::vector<double>& importances);

// Epoch-end update. Instance mode: q = tau * normalize(accum + floor)
// + (1-tau) * uniform. Class mode: per-class mean accumulated norm is
// normalized across classes, then spread uniformly within each class.
// Accumulators and sampled flags reset.
void update_data_distribution(DataDistribution& dist, std::size_t epoch,
                              std::size_t total_epochs);

// n i.i.d. draws from q (with replacement), marking sampled flags.
std::vector<std::size_t> sample_epoch_indices(DataDistribution& dist, std::size_t n,
                                              RngStream& rng);

}  // namespace pada
