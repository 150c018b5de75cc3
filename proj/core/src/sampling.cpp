#include "pada/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pada/errors.hpp"

namespace pada {
namespace {

void check_simplex(const std::vector<double>& p, const std::string& what) {
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0 || !std::isfinite(v))
            throw NumericError(what + ": negative or non-finite probability");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw NumericError(what + ": probabilities sum to " + std::to_string(sum));
}

std::vector<double> mix_with_uniform(const std::vector<double>& target, double w) {
    const double u = 1.0 / static_cast<double>(target.size());
    std::vector<double> out(target.size());
    for (std::size_t i = 0; i < target.size(); ++i)
        out[i] = w * target[i] + (1.0 - w) * u;
    return out;
}

std::vector<double> floored(const std::vector<double>& v) {
    std::vector<double> out(v);
    for (double& x : out) x += kEpsFloor;
    return out;
}

}  // namespace

double schedule(std::size_t epoch, std::size_t total_epochs, ScheduleStyle style) {
    if (total_epochs == 0) throw ConfigError("schedule: total_epochs must be positive");
    if (epoch < 1 || epoch > total_epochs)
        throw UsageError("schedule: epoch " + std::to_string(epoch) +
                         " out of range [1," + std::to_string(total_epochs) + "]");
    const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs);
    return style == ScheduleStyle::Increase ? t : 1.0 - t;
}

std::vector<double> optimal_simplex_weights(const std::vector<double>& norms) {
    if (norms.empty()) throw UsageError("optimal_simplex_weights: empty input");
    double sum = 0.0;
    for (double v : norms) {
        if (v < 0.0 || !std::isfinite(v))
            throw NumericError("optimal_simplex_weights: norms must be finite and >= 0");
        sum += v;
    }
    std::vector<double> out(norms.size());
    if (sum == 0.0) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(norms.size()));
    } else {
        for (std::size_t i = 0; i < norms.size(); ++i) out[i] = norms[i] / sum;
    }
    return out;
}

PathDistribution PathDistribution::uniform(const CellSpec& spec) {
    PathDistribution d;
    d.probs.assign(spec.n_edges(),
                   std::vector<double>(spec.n_ops(), 1.0 / static_cast<double>(spec.n_ops())));
    d.accum.assign(spec.n_edges(), std::vector<double>(spec.n_ops(), 0.0));
    return d;
}

void PathDistribution::validate() const {
    for (std::size_t e = 0; e < probs.size(); ++e) {
        check_simplex(probs[e], "PathDistribution edge " + std::to_string(e));
        for (double a : accum[e])
            if (a < 0.0 || !std::isfinite(a))
                throw NumericError("PathDistribution: negative accumulator");
    }
}

void accumulate_path_norms(PathDistribution& dist, const CellSpec& spec,
                           const Path& path, const GradientSet& grads) {
    path.validate(spec);
    if (dist.accum.size() != spec.n_edges())
        throw UsageError("accumulate_path_norms: distribution/spec edge count mismatch");
    for (std::size_t e = 0; e < spec.n_edges(); ++e) {
        const std::size_t k = path.op_index[e];
        double sq = 0.0;
        const std::string pfx =
            "edge" + std::to_string(e) + ".op" + std::to_string(k) + ".";
        for (const auto& [name, shape] : op_param_shapes(spec.ops[k], spec.hidden_dim)) {
            auto it = grads.find(pfx + name);
            if (it == grads.end())
                throw UsageError("accumulate_path_norms: gradient '" + pfx + name +
                                 "' missing (backward was not run on this path?)");
            for (double v : it->second.data) sq += v * v;
        }
        dist.accum[e][k] += std::sqrt(sq);  // parameter-free ops add exactly 0
    }
}

void update_path_distribution(PathDistribution& dist, std::size_t epoch,
                              std::size_t total_epochs) {
    dist.delta = schedule(epoch, total_epochs, dist.style);
    for (std::size_t e = 0; e < dist.probs.size(); ++e) {
        dist.probs[e] =
            mix_with_uniform(optimal_simplex_weights(floored(dist.accum[e])), dist.delta);
        std::fill(dist.accum[e].begin(), dist.accum[e].end(), 0.0);
    }
    dist.validate();
}

void refresh_path_distribution_from_accum(PathDistribution& dist) {
    for (std::size_t e = 0; e < dist.probs.size(); ++e)
        dist.probs[e] =
            mix_with_uniform(optimal_simplex_weights(floored(dist.accum[e])), dist.delta);
    dist.validate();
}

SampledPath sample_path(const PathDistribution& dist, RngStream& rng) {
    SampledPath out;
    out.path.op_index.resize(dist.probs.size());
    for (std::size_t e = 0; e < dist.probs.size(); ++e) {
        const auto& p = dist.probs[e];
        const double u = rng.uniform();  // exactly one uniform per edge
        double cdf = 0.0;
        std::size_t pick = p.size() - 1;  // guard against rounding at the top
        for (std::size_t k = 0; k < p.size(); ++k) {
            cdf += p[k];
            if (u < cdf) {
                pick = k;
                break;
            }
        }
        out.path.op_index[e] = pick;
        out.probability *= p[pick];
    }
    return out;
}

double reweight_factor(const PathDistribution& dist, const Path& path) {
    if (path.op_index.size() != dist.probs.size())
        throw UsageError("reweight_factor: path length does not match distribution");
    double factor = 1.0;
    for (std::size_t e = 0; e < dist.probs.size(); ++e) {
        const double p = dist.probs[e][path.op_index[e]];
        if (p <= 0.0)
            throw NumericError("reweight_factor: zero-probability op on edge " +
                               std::to_string(e));
        factor /= static_cast<double>(dist.probs[e].size()) * p;
    }
    return factor;
}

std::vector<double> per_sample_importance(const Tensor& last_layer_grad) {
    if (last_layer_grad.shape.size() != 2)
        throw UsageError("per_sample_importance: expected [B, C] tensor");
    const std::size_t B = last_layer_grad.shape[0], C = last_layer_grad.shape[1];
    std::vector<double> out(B);
    for (std::size_t i = 0; i < B; ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < C; ++j) {
            const double v = last_layer_grad.data[i * C + j];
            sq += v * v;
        }
        out[i] = std::sqrt(sq);
    }
    return out;
}

DataDistribution DataDistribution::uniform(std::size_t n_samples,
                                           std::vector<std::size_t> class_of,
                                           std::size_t n_classes) {
    if (n_samples == 0) throw UsageError("DataDistribution: empty dataset");
    if (class_of.size() != n_samples)
        throw UsageError("DataDistribution: class_of length mismatch");
    DataDistribution d;
    d.probs.assign(n_samples, 1.0 / static_cast<double>(n_samples));
    d.accum.assign(n_samples, 0.0);
    d.sampled.assign(n_samples, false);
    d.class_of = std::move(class_of);
    d.n_classes = n_classes;
    return d;
}

void DataDistribution::validate() const {
    check_simplex(probs, "DataDistribution");
    for (double a : accum)
        if (a < 0.0 || !std::isfinite(a))
            throw NumericError("DataDistribution: negative accumulator");
}

void accumulate_data_norms(DataDistribution& dist, const Batch& batch,
                           const std::vector<double>& importances) {
    if (importances.size() != batch.size())
        throw UsageError("accumulate_data_norms: importance count != batch size");
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const std::size_t id = batch.sample_ids[i];
        if (id >= dist.accum.size())
            throw UsageError("accumulate_data_norms: sample id out of range");
        dist.accum[id] += importances[i];
    }
}

void update_data_distribution(DataDistribution& dist, std::size_t epoch,
                              std::size_t total_epochs) {
    dist.tau = schedule(epoch, total_epochs, dist.style);
    const std::size_t n = dist.probs.size();
    std::vector<double> target;
    if (dist.granularity == Granularity::Instance) {
        target = optimal_simplex_weights(floored(dist.accum));
    } else {
        // class mode: mean accumulated norm per class, normalized across
        // classes, then spread evenly over each class's members
        if (dist.n_classes == 0)
            throw UsageError("update_data_distribution: class mode needs n_classes");
        std::vector<double> class_sum(dist.n_classes, 0.0);
        std::vector<std::size_t> class_count(dist.n_classes, 0);
        for (std::size_t i = 0; i < n; ++i) {
            class_sum[dist.class_of[i]] += dist.accum[i];
            ++class_count[dist.class_of[i]];
        }
        std::vector<double> class_mean(dist.n_classes, 0.0);
        for (std::size_t c = 0; c < dist.n_classes; ++c)
            class_mean[c] = class_count[c] ? class_sum[c] / static_cast<double>(class_count[c])
                                           : 0.0;
        const std::vector<double> class_mass = optimal_simplex_weights(floored(class_mean));
        target.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = dist.class_of[i];
            if (class_count[c] == 0) continue;
            target[i] = class_mass[c] / static_cast<double>(class_count[c]);
        }
        // classes with no members carry mass nowhere; renormalize
        double s = 0.0;
        for (double v : target) s += v;
        for (double& v : target) v /= s;
    }
    dist.probs = mix_with_uniform(target, dist.tau);
    std::fill(dist.accum.begin(), dist.accum.end(), 0.0);
    std::fill(dist.sampled.begin(), dist.sampled.end(), false);
    dist.validate();
}

std::vector<std::size_t> sample_epoch_indices(DataDistribution& dist, std::size_t n,
                                              RngStream& rng) {
    if (n == 0) throw UsageError("sample_epoch_indices: n must be positive");
    std::vector<double> cdf(dist.probs.size());
    double run = 0.0;
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
        run += dist.probs[i];
        cdf[i] = run;
    }
    cdf.back() = 1.0;  // close the top against rounding
    std::vector<std::size_t> out(n);
    for (std::size_t d = 0; d < n; ++d) {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const std::size_t idx = static_cast<std::size_t>(it - cdf.begin());
        out[d] = idx;
        dist.sampled[idx] = true;
    }
    return out;
}

}  // namespace pada
