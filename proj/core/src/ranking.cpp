#include "pada/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "pada/errors.hpp"
#include "pada/nn.hpp"
#include "pada/rng.hpp"

namespace pada {
namespace {

// Strict inversions in v (pairs i<j with v[i] > v[j]) by merge sort.
std::size_t count_inversions(std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<double> tmp(n);
    std::size_t inv = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
            const std::size_t mid = lo + width;
            const std::size_t hi = std::min(lo + 2 * width, n);
            std::size_t i = lo, j = mid, k = lo;
            while (i < mid && j < hi) {
                if (v[j] < v[i]) {
                    inv += mid - i;  // v[i..mid) all exceed v[j]
                    tmp[k++] = v[j++];
                } else {
                    tmp[k++] = v[i++];
                }
            }
            while (i < mid) tmp[k++] = v[i++];
            while (j < hi) tmp[k++] = v[j++];
            std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo),
                      tmp.begin() + static_cast<std::ptrdiff_t>(hi),
                      v.begin() + static_cast<std::ptrdiff_t>(lo));
        }
    }
    return inv;
}

// Sum over equal-value runs of m*(m-1)/2, given a sorted key extractor.
template <typename Eq>
std::size_t tied_pairs(std::size_t n, Eq same) {
    std::size_t pairs = 0, run = 1;
    for (std::size_t i = 1; i < n; ++i) {
        if (same(i - 1, i)) {
            ++run;
        } else {
            pairs += run * (run - 1) / 2;
            run = 1;
        }
    }
    pairs += run * (run - 1) / 2;
    return pairs;
}

}  // namespace

double accuracy(const Tensor& logits, const std::vector<std::size_t>& labels) {
    const std::size_t B = logits.shape[0], C = logits.shape[1];
    if (labels.size() != B) throw UsageError("accuracy: label count mismatch");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < B; ++i) {
        const double* row = &logits.data[i * C];
        std::size_t arg = 0;
        for (std::size_t j = 1; j < C; ++j)
            if (row[j] > row[arg]) arg = j;  // strict: ties keep lowest class
        if (arg == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(B);
}

std::vector<double> evaluate_all(const Supernet& net, const std::vector<Path>& paths,
                                 const Dataset& eval_data, std::size_t n_threads) {
    if (eval_data.n() == 0) throw UsageError("evaluate_all: empty eval set");
    std::vector<std::size_t> all(eval_data.n());
    std::iota(all.begin(), all.end(), 0);
    const Batch batch = make_batch(eval_data, all);

    std::vector<double> scores(paths.size(), 0.0);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Tensor logits = forward(net.params, net.spec, paths[i], batch).logits;
            scores[i] = accuracy(logits, batch.labels);
        }
    };

    if (n_threads <= 1 || paths.size() < 2) {
        work(0, paths.size());
        return scores;
    }
    const std::size_t nt = std::min<std::size_t>(n_threads, paths.size());
    std::vector<std::thread> pool;
    const std::size_t chunk = (paths.size() + nt - 1) / nt;
    for (std::size_t t = 0; t < nt; ++t) {
        const std::size_t b = t * chunk;
        const std::size_t e = std::min(b + chunk, paths.size());
        if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
    return scores;
}

double kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw UsageError("kendall_tau: vectors differ in length");
    const std::size_t n = a.size();
    if (n < 2) throw UsageError("kendall_tau: need at least 2 entries");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
        if (a[i] != a[j]) return a[i] < a[j];
        return b[i] < b[j];
    });

    // ties among a, and among (a,b) jointly, over the a-sorted order
    const std::size_t t_a =
        tied_pairs(n, [&](std::size_t i, std::size_t j) { return a[idx[i]] == a[idx[j]]; });
    const std::size_t t_ab = tied_pairs(n, [&](std::size_t i, std::size_t j) {
        return a[idx[i]] == a[idx[j]] && b[idx[i]] == b[idx[j]];
    });

    std::vector<double> b_sorted(n);
    for (std::size_t i = 0; i < n; ++i) b_sorted[i] = b[idx[i]];
    // within an a-tie run b is ascending, so inversions only cross runs:
    // D = discordant pair count
    const std::size_t d = count_inversions(b_sorted);

    std::vector<double> b_only(b);
    std::sort(b_only.begin(), b_only.end());
    const std::size_t t_b =
        tied_pairs(n, [&](std::size_t i, std::size_t j) { return b_only[i] == b_only[j]; });

    const std::size_t total = n * (n - 1) / 2;
    const std::size_t c = total - d - t_a - t_b + t_ab;
    return (static_cast<double>(c) - static_cast<double>(d)) /
           static_cast<double>(total);
}

std::vector<std::size_t> topk_indices(const std::vector<double>& scores, std::size_t k) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t i, std::size_t j) { return scores[i] > scores[j]; });
    idx.resize(std::min(k, idx.size()));
    return idx;
}

double precision_at_topk(const std::vector<double>& pred,
                         const std::vector<double>& truth, double k_frac) {
    if (pred.size() != truth.size())
        throw UsageError("precision_at_topk: vectors differ in length");
    if (k_frac <= 0.0 || k_frac > 1.0)
        throw UsageError("precision_at_topk: k_frac must be in (0,1]");
    const std::size_t n = pred.size();
    if (n == 0) throw UsageError("precision_at_topk: empty vectors");
    const std::size_t k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(k_frac * static_cast<double>(n))));
    const auto pk = topk_indices(pred, k);
    const auto tk = topk_indices(truth, k);
    std::vector<bool> in_truth(n, false);
    for (std::size_t i : tk) in_truth[i] = true;
    std::size_t overlap = 0;
    for (std::size_t i : pk)
        if (in_truth[i]) ++overlap;
    return static_cast<double>(overlap) / static_cast<double>(k);
}

double train_standalone_oracle(const CellSpec& spec, const Path& path,
                               const Dataset& train_data, const Dataset& eval_data,
                               const OracleConfig& cfg, std::uint64_t seed) {
    path.validate(spec);
    if (train_data.n() == 0 || eval_data.n() == 0)
        throw UsageError("train_standalone_oracle: empty dataset");

    // fresh model with only this path's parameters, canonical init order
    RngStream init_rng(seed, "standalone-init");
    ParamMap params;
    params["stem.W"] = init_param_tensor({spec.d_in, spec.hidden_dim}, init_rng);
    params["stem.b"] = init_param_tensor({spec.hidden_dim}, init_rng);
    params["cls.W"] = init_param_tensor({spec.hidden_dim, spec.n_classes}, init_rng);
    params["cls.b"] = init_param_tensor({spec.n_classes}, init_rng);
    for (std::size_t e = 0; e < spec.n_edges(); ++e) {
        const std::size_t k = path.op_index[e];
        const std::string pfx =
            "edge" + std::to_string(e) + ".op" + std::to_string(k) + ".";
        for (const auto& [name, shape] : op_param_shapes(spec.ops[k], spec.hidden_dim))
            params[pfx + name] = init_param_tensor(shape, init_rng);
    }

    RngStream data_rng(seed, "standalone-data");
    OptimizerState opt;
    opt.base_lr = cfg.base_lr;
    opt.min_lr = cfg.min_lr;
    opt.momentum_coef = cfg.momentum;
    opt.weight_decay = cfg.weight_decay;

    std::vector<std::size_t> order(train_data.n());
    std::iota(order.begin(), order.end(), 0);
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cosine_lr(epoch, cfg.epochs, cfg.base_lr, cfg.min_lr);
        data_rng.shuffle(order);
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
            const std::size_t end = std::min(at + cfg.batch_size, order.size());
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(at),
                                               order.begin() + static_cast<std::ptrdiff_t>(end));
            const Batch batch = make_batch(train_data, idx);
            BackwardResult bwd;
            try {
                auto fwd = forward(params, spec, path, batch);
                bwd = backward(params, spec, path, batch, fwd.cache);
            } catch (const NumericError& e) {
                throw NumericError("standalone training diverged on path " +
                                   path.to_string() + " at step " +
                                   std::to_string(step) + " (" + e.what() + ")");
            }
            if (!std::isfinite(bwd.loss))
                throw NumericError("standalone training diverged on path " +
                                   path.to_string() + " at step " +
                                   std::to_string(step));
            sgd_step(params, bwd.grads, opt, lr);
            ++step;
        }
        ++opt.epoch_count;
    }

    std::vector<std::size_t> all(eval_data.n());
    std::iota(all.begin(), all.end(), 0);
    const Batch eval_batch = make_batch(eval_data, all);
    const Tensor logits = forward(params, spec, path, eval_batch).logits;
    return accuracy(logits, eval_batch.labels);
}

RankingReport make_ranking_report(const std::vector<Path>& paths,
                                  const std::vector<double>& supernet_acc,
                                  const std::vector<double>& truth_acc, double k_frac,
                                  std::uint64_t seed) {
    if (paths.size() != supernet_acc.size() || paths.size() != truth_acc.size())
        throw UsageError("make_ranking_report: vector lengths differ");
    RankingReport r;
    r.path_strings.reserve(paths.size());
    for (const Path& p : paths) r.path_strings.push_back(p.to_string());
    r.supernet_acc = supernet_acc;
    r.truth_acc = truth_acc;
    r.k_frac = k_frac;
    r.seed = seed;
    r.kt = kendall_tau(supernet_acc, truth_acc);
    r.p_at_topk = precision_at_topk(supernet_acc, truth_acc, k_frac);
    return r;
}

}  // namespace pada
