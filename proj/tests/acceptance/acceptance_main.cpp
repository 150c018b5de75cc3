// Acceptance gate for the supernet laboratory. Each criterion prints one
// [PASS]/[FAIL] line; the exit code is the number of failures. Tolerances
// are pinned here, next to the checks that use them.
//
// The checks are intentionally independent of the unit suites: brute-force
// or analytically independent oracles are recomputed locally rather than
// shared, so a bug in library code cannot hide inside its own test helper.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pada/config.hpp"
#include "pada/dataset.hpp"
#include "pada/errors.hpp"
#include "pada/nn.hpp"
#include "pada/ranking.hpp"
#include "pada/rng.hpp"
#include "pada/sampling.hpp"
#include "pada/search_space.hpp"
#include "pada/supernet.hpp"
#include "pada/tensor.hpp"
#include "pada/trainer.hpp"
#include "pada/variance_stats.hpp"

using namespace pada;

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// 1. Simplex sampling weights vs. a 0.001 grid.
//
// The objective f(p) = sum_i g_i^2 / p_i is separable convex on the simplex,
// so on the 0.001 lattice any point with no improving one-unit transfer
// between a pair of coordinates is the global lattice minimum. Lengths 2-3
// are additionally checked by full enumeration; beyond that the exhaustive
// grid is astronomically large and the exchange-descent certificate stands
// in for it.
// ---------------------------------------------------------------------------

double simplex_objective(const std::vector<double>& g, const std::vector<double>& p) {
    double f = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i] == 0.0) continue;  // 0^2 / p contributes nothing even at p == 0
        if (p[i] <= 0.0) return std::numeric_limits<double>::infinity();
        f += g[i] * g[i] / p[i];
    }
    return f;
}

double grid_objective(const std::vector<double>& g, const std::vector<long>& units,
                      double step) {
    double f = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g[i] == 0.0) continue;
        if (units[i] == 0) return std::numeric_limits<double>::infinity();
        f += g[i] * g[i] / (static_cast<double>(units[i]) * step);
    }
    return f;
}

// Nearest lattice point to a real simplex vector: floor everything, then
// hand the leftover units to the largest fractional remainders.
std::vector<long> snap_to_grid(const std::vector<double>& p, long total) {
    const std::size_t n = p.size();
    std::vector<long> units(n);
    std::vector<std::pair<double, std::size_t>> rem(n);
    long used = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double scaled = p[i] * static_cast<double>(total);
        units[i] = static_cast<long>(std::floor(scaled));
        rem[i] = {scaled - std::floor(scaled), i};
        used += units[i];
    }
    std::sort(rem.begin(), rem.end(), std::greater<>());
    for (long k = 0; k < total - used; ++k) units[rem[static_cast<std::size_t>(k)].second] += 1;
    return units;
}

// Exchange descent: repeatedly apply the best single-unit transfer until
// none improves. Returns the certified lattice minimum.
std::vector<long> descend_on_grid(const std::vector<double>& g, std::vector<long> units,
                                  double step) {
    const std::size_t n = units.size();
    while (true) {
        double best = grid_objective(g, units, step);
        std::size_t best_from = n, best_to = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (units[i] == 0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                units[i] -= 1;
                units[j] += 1;
                const double f = grid_objective(g, units, step);
                units[i] += 1;
                units[j] -= 1;
                if (f < best) {
                    best = f;
                    best_from = i;
                    best_to = j;
                }
            }
        }
        if (best_from == n) return units;
        units[best_from] -= 1;
        units[best_to] += 1;
    }
}

void enumerate_grid(const std::vector<double>& g, std::size_t coord, long left,
                    std::vector<long>& units, double step, double& best_f,
                    std::vector<long>& best_u) {
    if (coord + 1 == units.size()) {
        units[coord] = left;
        const double f = grid_objective(g, units, step);
        if (f < best_f) {
            best_f = f;
            best_u = units;
        }
        return;
    }
    for (long v = 0; v <= left; ++v) {
        units[coord] = v;
        enumerate_grid(g, coord + 1, left - v, units, step, best_f, best_u);
    }
}

bool criterion_simplex_weights(std::string& detail) {
    RngStream rng(20240901, "acceptance-simplex");
    const double step = 0.001;
    const long total = 1000;
    int checked = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 5);
        std::vector<double> g(n);
        for (auto& v : g) v = 0.05 + 0.95 * rng.uniform();
        if (trial % 7 == 3) g[trial % n] = 0.0;  // exercise the boundary

        const std::vector<double> p_star = optimal_simplex_weights(g);

        std::vector<long> grid_min = descend_on_grid(g, snap_to_grid(p_star, total), step);
        if (n <= 3) {
            // cross-check the descent certificate against the real thing
            double best_f = std::numeric_limits<double>::infinity();
            std::vector<long> best_u(n), scratch(n);
            enumerate_grid(g, 0, total, scratch, step, best_f, best_u);
            if (grid_objective(g, grid_min, step) > best_f) {
                detail = "exchange descent missed the enumerated minimum at trial " +
                         std::to_string(trial);
                return false;
            }
            grid_min = best_u;
        }

        for (std::size_t i = 0; i < n; ++i) {
            const double grid_p = static_cast<double>(grid_min[i]) * step;
            if (std::abs(p_star[i] - grid_p) > step + 1e-9) {
                detail = "coordinate " + std::to_string(i) + " off by " +
                         std::to_string(std::abs(p_star[i] - grid_p)) + " at trial " +
                         std::to_string(trial);
                return false;
            }
        }
        if (simplex_objective(g, p_star) >
            grid_objective(g, grid_min, step) + 1e-12) {
            detail = "analytic objective above the grid minimum at trial " +
                     std::to_string(trial);
            return false;
        }
        ++checked;
    }
    detail = std::to_string(checked) + "/50 vectors within one grid step";
    return true;
}

// ---------------------------------------------------------------------------
// 2. Reweighted path gradients are unbiased over exact enumeration.
// ---------------------------------------------------------------------------

bool criterion_reweight_unbiased(std::string& detail) {
    const CellSpec spec = CellSpec::make(4, {OpKind::Skip, OpKind::Linear}, 8, 8, 4);
    RngStream init_rng(31337, "acceptance-unbias-init");
    const Supernet net = build_supernet(spec, init_rng);

    const SyntheticSplit data = generate_synthetic_split(6, 2, 4, 8, 1.5, 1.0, 99);
    std::vector<std::size_t> idx(16);
    std::iota(idx.begin(), idx.end(), 0);
    const Batch batch = make_batch(data.train, idx);

    // A deliberately skewed distribution produced by the production update
    // path at half smoothing, so every probability stays well off zero.
    PathDistribution dist = PathDistribution::uniform(spec);
    RngStream skew_rng(4242, "acceptance-unbias-skew");
    for (auto& edge : dist.accum)
        for (auto& a : edge) a = 0.1 + skew_rng.uniform();
    update_path_distribution(dist, 30, 60);

    const std::vector<Path> paths = enumerate_paths(spec);
    std::map<std::string, Tensor> weighted, uniform_mean;
    double prob_sum = 0.0;
    for (const Path& p : paths) {
        const auto fwd = forward(net.params, spec, p, batch);
        const auto bwd = backward(net.params, spec, p, batch, fwd.cache);
        double prob = 1.0;
        for (std::size_t e = 0; e < spec.n_edges(); ++e)
            prob *= dist.probs[e][p.op_index[e]];
        prob_sum += prob;
        const double factor = reweight_factor(dist, p);
        for (const auto& [name, gt] : bwd.grads) {
            auto ensure = [&](std::map<std::string, Tensor>& m) -> Tensor& {
                auto it = m.find(name);
                if (it == m.end()) {
                    Tensor z = gt;
                    std::fill(z.data.begin(), z.data.end(), 0.0);
                    it = m.emplace(name, std::move(z)).first;
                }
                return it->second;
            };
            Tensor& w = ensure(weighted);
            Tensor& u = ensure(uniform_mean);
            for (std::size_t i = 0; i < gt.data.size(); ++i) {
                w.data[i] += prob * factor * gt.data[i];
                u.data[i] += gt.data[i] / static_cast<double>(paths.size());
            }
        }
    }

    if (std::abs(prob_sum - 1.0) > 1e-12) {
        detail = "path probabilities sum to " + std::to_string(prob_sum);
        return false;
    }
    double worst = 0.0;
    for (const auto& [name, w] : weighted) {
        const Tensor& u = uniform_mean.at(name);
        for (std::size_t i = 0; i < w.data.size(); ++i)
            worst = std::max(worst, std::abs(w.data[i] - u.data[i]));
    }
    std::ostringstream os;
    os << "max |weighted - uniform| = " << worst << " over " << weighted.size()
       << " tensors";
    detail = os.str();
    return worst <= 1e-10;
}

// ---------------------------------------------------------------------------
// 3. Analytic gradients vs. central finite differences, every op kind.
// ---------------------------------------------------------------------------

// Minimal recomputation of the relu preactivations so instances whose
// forward pass grazes a kink can be rejected (finite differences straddle
// the nondifferentiable point there). Rejection only has to be conservative.
double min_abs_relu_preact(const Supernet& net, const CellSpec& spec, const Path& path,
                           const Batch& batch) {
    const auto fwd = forward(net.params, spec, path, batch);
    double min_abs = std::numeric_limits<double>::infinity();
    // node_values hold post-sum node activations; recompute each relu op's
    // preactivation from its source node.
    for (std::size_t e = 0; e < spec.n_edges(); ++e) {
        const OpKind kind = spec.ops[path.op_index[e]];
        if (kind != OpKind::LinearRelu && kind != OpKind::Mlp2) continue;
        const auto [src, dst] = spec.edges[e];
        const Tensor& x = fwd.cache.node_values[src];
        const std::string prefix =
            "edge" + std::to_string(e) + ".op" + std::to_string(path.op_index[e]) + ".";
        const std::size_t B = batch.inputs.shape[0];
        if (kind == OpKind::LinearRelu) {
            const Tensor& W = net.params.at(prefix + "W");
            const Tensor& b = net.params.at(prefix + "b");
            const std::size_t h = W.shape[1];
            for (std::size_t r = 0; r < B; ++r)
                for (std::size_t c = 0; c < h; ++c) {
                    double pre = b.data[c];
                    for (std::size_t k = 0; k < W.shape[0]; ++k)
                        pre += x.data[r * W.shape[0] + k] * W.data[k * h + c];
                    min_abs = std::min(min_abs, std::abs(pre));
                }
        } else {  // Mlp2: only the hidden layer is rectified
            const Tensor& W1 = net.params.at(prefix + "W1");
            const Tensor& b1 = net.params.at(prefix + "b1");
            const std::size_t mid = W1.shape[1];
            for (std::size_t r = 0; r < B; ++r)
                for (std::size_t c = 0; c < mid; ++c) {
                    double pre = b1.data[c];
                    for (std::size_t k = 0; k < W1.shape[0]; ++k)
                        pre += x.data[r * W1.shape[0] + k] * W1.data[k * mid + c];
                    min_abs = std::min(min_abs, std::abs(pre));
                }
        }
    }
    return min_abs;
}

bool criterion_fd_gradients(std::string& detail) {
    const std::vector<OpKind> all_kinds = {OpKind::Zero, OpKind::Skip, OpKind::Linear,
                                           OpKind::LinearRelu, OpKind::Mlp2};
    RngStream rng(777001, "acceptance-fd");
    double worst_rel = 0.0;
    std::map<OpKind, int> coverage;
    int instance = 0, attempts = 0;
    while (instance < 100 && attempts < 1000) {
        ++attempts;
        // menu always contains the cycling kind so 100 instances cover all 5
        const OpKind forced = all_kinds[static_cast<std::size_t>(instance) % 5];
        OpKind other = all_kinds[rng.below(5)];
        while (other == forced) other = all_kinds[rng.below(5)];
        const std::size_t n_nodes = 2 + rng.below(2);
        const std::size_t h = 2 + 2 * rng.below(2);  // even, for the bottleneck op
        const std::size_t d_in = 2 + rng.below(2);
        const std::size_t n_classes = 2 + rng.below(2);
        const std::size_t B = 1 + rng.below(3);
        const CellSpec spec = CellSpec::make(n_nodes, {forced, other}, h, d_in, n_classes);

        Supernet net = build_supernet(spec, rng);
        Path path;
        path.op_index.resize(spec.n_edges());
        for (auto& k : path.op_index) k = rng.below(2);
        path.op_index[0] = 0;  // pin the cycled kind onto the path

        Batch batch;
        batch.inputs = Tensor::zeros({B, d_in});
        for (auto& v : batch.inputs.data) v = rng.normal();
        batch.labels.resize(B);
        batch.sample_ids.resize(B);
        for (std::size_t i = 0; i < B; ++i) {
            batch.labels[i] = rng.below(n_classes);
            batch.sample_ids[i] = i;
        }

        if (min_abs_relu_preact(net, spec, path, batch) < 1e-3) continue;  // kink: redraw

        const auto fwd = forward(net.params, spec, path, batch);
        const auto bwd = backward(net.params, spec, path, batch, fwd.cache);
        for (const auto& k : path.op_index) coverage[spec.ops[k]]++;

        // five-point central stencil: truncation is O(h^4) so the roundoff
        // floor (~eps/h) dominates, leaving two orders of margin on the gate
        const double h_fd = 1e-4;
        for (const auto& [name, grad] : bwd.grads) {
            for (std::size_t i = 0; i < grad.data.size(); ++i) {
                ParamMap perturbed = net.params;
                auto loss_at = [&](double d) {
                    perturbed.at(name).data[i] = net.params.at(name).data[i] + d;
                    const auto f = forward(perturbed, spec, path, batch);
                    return backward(perturbed, spec, path, batch, f.cache).loss;
                };
                const double fd = (8.0 * (loss_at(h_fd) - loss_at(-h_fd)) -
                                   (loss_at(2 * h_fd) - loss_at(-2 * h_fd))) /
                                  (12.0 * h_fd);
                const double scale =
                    std::max({std::abs(fd), std::abs(grad.data[i]), 1e-4});
                const double rel = std::abs(fd - grad.data[i]) / scale;
                worst_rel = std::max(worst_rel, rel);
                if (rel >= 1e-6) {
                    std::ostringstream os;
                    os << name << "[" << i << "] rel err " << rel << " at instance "
                       << instance;
                    detail = os.str();
                    return false;
                }
            }
        }
        ++instance;
    }
    if (instance < 100) {
        detail = "only " + std::to_string(instance) + " usable instances in 1000 draws";
        return false;
    }
    for (const auto k : all_kinds)
        if (coverage[k] == 0) {
            detail = "an op kind was never exercised";
            return false;
        }
    std::ostringstream os;
    os << "100 instances, worst rel err " << worst_rel;
    detail = os.str();
    return true;
}

// ---------------------------------------------------------------------------
// 4. Per-sample last-layer shortcut equals B x the mean-loss logits gradient.
// ---------------------------------------------------------------------------

bool criterion_last_layer_shortcut(std::string& detail) {
    RngStream rng(555123, "acceptance-shortcut");
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n_classes = 2 + rng.below(4);
        const std::size_t B = 1 + rng.below(8);
        const CellSpec spec =
            CellSpec::make(3, {OpKind::Skip, OpKind::Linear, OpKind::LinearRelu}, 4,
                           3, n_classes);
        Supernet net = build_supernet(spec, rng);
        Path path;
        path.op_index.resize(spec.n_edges());
        for (auto& k : path.op_index) k = rng.below(3);

        Batch batch;
        batch.inputs = Tensor::zeros({B, 3});
        for (auto& v : batch.inputs.data) v = rng.normal();
        batch.labels.resize(B);
        batch.sample_ids.resize(B);
        for (std::size_t i = 0; i < B; ++i) {
            batch.labels[i] = rng.below(n_classes);
            batch.sample_ids[i] = i;
        }

        const auto fwd = forward(net.params, spec, path, batch);
        const auto bwd = backward(net.params, spec, path, batch, fwd.cache);

        // Independent mean-loss logits gradient in extended precision:
        // dL/dy[r][c] = (softmax(y)[r][c] - [c == label_r]) / B. The shortcut
        // must equal exactly B times that.
        const Tensor& y = fwd.logits;
        for (std::size_t r = 0; r < B; ++r) {
            long double mx = y.data[r * n_classes];
            for (std::size_t c = 1; c < n_classes; ++c)
                mx = std::max(mx, static_cast<long double>(y.data[r * n_classes + c]));
            long double denom = 0.0L;
            for (std::size_t c = 0; c < n_classes; ++c)
                denom += std::exp(static_cast<long double>(y.data[r * n_classes + c]) - mx);
            for (std::size_t c = 0; c < n_classes; ++c) {
                const long double sm =
                    std::exp(static_cast<long double>(y.data[r * n_classes + c]) - mx) /
                    denom;
                const long double dmean =
                    (sm - (batch.labels[r] == c ? 1.0L : 0.0L)) /
                    static_cast<long double>(B);
                const double expect =
                    static_cast<double>(static_cast<long double>(B) * dmean);
                const double got = bwd.last_layer_grad.data[r * n_classes + c];
                worst = std::max(worst, std::abs(got - expect));
            }
        }
    }
    std::ostringstream os;
    os << "max |shortcut - B*dL/dy| = " << worst << " over 100 batches";
    detail = os.str();
    return worst <= 1e-12;
}

// ---------------------------------------------------------------------------
// 5. Ranking metrics vs. brute force.
// ---------------------------------------------------------------------------

double kt_bruteforce(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    long long num = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = (a[i] - a[j]) * (b[i] - b[j]);
            if (s > 0) ++num;
            else if (s < 0) --num;
        }
    return static_cast<double>(num) / (static_cast<double>(n) * (n - 1) / 2.0);
}

double ptopk_bruteforce(const std::vector<double>& pred, const std::vector<double>& truth,
                        double k_frac) {
    const std::size_t n = pred.size();
    const std::size_t k =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(k_frac * n)));
    auto topk = [&](const std::vector<double>& s) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t x, std::size_t y) { return s[x] > s[y]; });
        return std::set<std::size_t>(idx.begin(),
                                     idx.begin() + static_cast<std::ptrdiff_t>(k));
    };
    const auto sp = topk(pred);
    const auto st = topk(truth);
    std::size_t hit = 0;
    for (const auto i : sp) hit += st.count(i);
    return static_cast<double>(hit) / static_cast<double>(k);
}

bool criterion_ranking_metrics(std::string& detail) {
    RngStream rng(99120, "acceptance-ranking");
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(199);
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = rng.uniform();
        for (auto& v : b) v = rng.uniform();
        if (trial % 3 == 0)  // mass ties
            for (auto& v : a) v = std::floor(v * 10.0) / 10.0;
        if (trial % 4 == 0)
            for (auto& v : b) v = std::floor(v * 5.0) / 5.0;

        if (kendall_tau(a, b) != kt_bruteforce(a, b)) {
            detail = "kendall_tau mismatch at trial " + std::to_string(trial);
            return false;
        }
        for (const double kf : {0.05, 0.1, 0.25}) {
            if (precision_at_topk(a, b, kf) != ptopk_bruteforce(a, b, kf)) {
                detail = "precision_at_topk mismatch at trial " + std::to_string(trial) +
                         " k_frac " + std::to_string(kf);
                return false;
            }
        }
    }

    // fixed cases: distinct scores, their reverse, and disjoint top sets
    std::vector<double> a(40), rev(40);
    for (std::size_t i = 0; i < 40; ++i) a[i] = static_cast<double>(i) * 0.1 + 1.0;
    std::reverse_copy(a.begin(), a.end(), rev.begin());
    if (kendall_tau(a, a) != 1.0 || kendall_tau(a, rev) != -1.0) {
        detail = "fixed identity/reverse cases failed";
        return false;
    }
    std::vector<double> pred(40, 0.0), truth(40, 0.0);
    for (std::size_t i = 0; i < 4; ++i) pred[36 + i] = 1.0 + static_cast<double>(i);
    for (std::size_t i = 0; i < 4; ++i) truth[i] = 1.0 + static_cast<double>(i);
    if (precision_at_topk(pred, truth, 0.1) != 0.0) {
        detail = "disjoint top-k should score zero";
        return false;
    }
    detail = "100 random pairs + fixed cases, exact equality";
    return true;
}

// ---------------------------------------------------------------------------
// 6. Streaming gradient variance vs. two-pass recomputation.
// ---------------------------------------------------------------------------

bool criterion_gv_two_pass(std::string& detail) {
    RngStream rng(313370, "acceptance-gv");
    const std::vector<std::pair<std::string, std::vector<std::size_t>>> shapes = {
        {"edge0.op1.W", {4, 3}},
        {"edge2.op0.b", {5}},
        {"stem.W", {3, 3}},
        {"cls.b", {2}},
    };
    std::vector<GradientSet> trace;
    GradVarTracker ops_tracker(GvScope::CandidateOps);
    GradVarTracker all_tracker(GvScope::All);
    for (int step = 0; step < 157; ++step) {
        GradientSet g;
        for (const auto& [name, shape] : shapes) {
            if (name == "edge2.op0.b" && step % 3 != 0) continue;  // intermittent
            if (name == "cls.b" && step != 42) continue;           // seen once
            Tensor t = Tensor::zeros(shape);
            for (auto& v : t.data) v = rng.normal() * 0.3;
            g.emplace(name, std::move(t));
        }
        trace.push_back(g);
        ops_tracker.record(g);
        all_tracker.record(g);
    }

    auto two_pass = [&](const std::string& name) {
        std::vector<const Tensor*> seen;
        for (const auto& g : trace) {
            auto it = g.find(name);
            if (it != g.end()) seen.push_back(&it->second);
        }
        const std::size_t s = seen.size();
        const std::size_t elems = seen[0]->data.size();
        double var_sum = 0.0;
        for (std::size_t i = 0; i < elems; ++i) {
            double mean = 0.0;
            for (const auto* t : seen) mean += t->data[i];
            mean /= static_cast<double>(s);
            double m2 = 0.0;
            for (const auto* t : seen) {
                const double d = t->data[i] - mean;
                m2 += d * d;
            }
            var_sum += m2 / static_cast<double>(s);
        }
        return var_sum / static_cast<double>(elems);
    };

    double worst_rel = 0.0;
    for (const std::string name : {"edge0.op1.W", "edge2.op0.b", "stem.W"}) {
        const double ref = two_pass(name);
        const double got = all_tracker.parameter_variance(name);
        worst_rel = std::max(worst_rel, std::abs(got - ref) / std::abs(ref));
    }
    // scope-filtered scalar: candidate ops only, then everything eligible
    const double ops_ref = (two_pass("edge0.op1.W") + two_pass("edge2.op0.b")) / 2.0;
    const double all_ref =
        (two_pass("edge0.op1.W") + two_pass("edge2.op0.b") + two_pass("stem.W")) / 3.0;
    worst_rel = std::max(worst_rel,
                         std::abs(ops_tracker.supernet_gv() - ops_ref) / ops_ref);
    worst_rel = std::max(worst_rel,
                         std::abs(all_tracker.supernet_gv() - all_ref) / all_ref);
    std::ostringstream os;
    os << "worst rel err " << worst_rel << " (157-step trace, intermittent params)";
    detail = os.str();
    return worst_rel < 1e-9;
}

// ---------------------------------------------------------------------------
// 7 + 8. The desk-scale experiment: four sampler cells x five seeds against
// one standalone ground-truth table.
//
// Experiment constants were chosen by pilot runs documented in the decisions
// ledger: overlapping classes (separation 0.5 at noise 1.0) so the data
// distribution has a broad hard-sample set, momentum 0 so concentrated
// sampling does not compound through the momentum buffer, and a slow plain-
// SGD oracle whose accuracy spread carries the ranking signal.
// ---------------------------------------------------------------------------

struct ExperimentResult {
    // [cell][seed] with cells ordered: baseline, path-only, data-only, both
    std::vector<std::vector<double>> kt;
    std::vector<std::vector<double>> lastq_gv;
    double truth_spread = 0.0;
    double seconds = 0.0;
};

ExperimentResult run_experiment() {
    const double t0 = now_seconds();
    const CellSpec spec = CellSpec::make(4, {OpKind::Skip, OpKind::Linear}, 16, 16, 4);
    const SyntheticSplit data = generate_synthetic_split(512, 128, 4, 16, 0.5, 1.0, 777);

    OracleConfig ocfg;
    ocfg.epochs = 60;
    ocfg.batch_size = 64;
    ocfg.base_lr = 0.001;
    ocfg.min_lr = 0.0;
    ocfg.momentum = 0.0;
    ocfg.weight_decay = 1e-4;

    const std::vector<Path> paths = enumerate_paths(spec);
    std::vector<double> truth(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i)
        truth[i] = train_standalone_oracle(spec, paths[i], data.train, data.eval, ocfg,
                                           /*seed=*/100);

    ExperimentResult res;
    res.kt.assign(4, std::vector<double>(5, 0.0));
    res.lastq_gv.assign(4, std::vector<double>(5, 0.0));
    const double tmin = *std::min_element(truth.begin(), truth.end());
    const double tmax = *std::max_element(truth.begin(), truth.end());
    res.truth_spread = tmax - tmin;

    for (int cell = 0; cell < 4; ++cell) {
        const bool pa_on = cell == 1 || cell == 3;
        const bool da_on = cell == 2 || cell == 3;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            TrainConfig cfg;
            cfg.epochs = 60;
            cfg.batch_size = 64;
            cfg.base_lr = 0.01;
            cfg.min_lr = 0.0;
            cfg.momentum = 0.0;
            cfg.weight_decay = 1e-4;
            cfg.master_seed = seed;
            cfg.pa.enabled = pa_on;
            cfg.da.enabled = da_on;
            const TrainOutcome out = train_supernet(spec, cfg, data.train);

            const std::vector<double> evals = evaluate_all(out.net, paths, data.eval);
            res.kt[static_cast<std::size_t>(cell)][seed - 1] = kendall_tau(evals, truth);

            const std::size_t q = cfg.epochs / 4;
            double gv_sum = 0.0;
            for (std::size_t e = cfg.epochs - q; e < cfg.epochs; ++e)
                gv_sum += out.history[e].gv;
            res.lastq_gv[static_cast<std::size_t>(cell)][seed - 1] =
                gv_sum / static_cast<double>(q);
        }
    }
    res.seconds = now_seconds() - t0;
    return res;
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

bool criterion_variance_and_ranking(const ExperimentResult& r, std::string& detail) {
    int gv_wins = 0;
    for (int s = 0; s < 5; ++s)
        if (r.lastq_gv[3][static_cast<std::size_t>(s)] <
            r.lastq_gv[0][static_cast<std::size_t>(s)])
            ++gv_wins;
    const double kt_both = mean(r.kt[3]);
    const double kt_base = mean(r.kt[0]);
    const bool gv_ok = gv_wins >= 4;
    const bool kt_ok = kt_both >= kt_base;
    const bool budget_ok = r.seconds < 1800.0;
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << "last-quarter GV lower in " << gv_wins << "/5 paired seeds; mean KT both="
       << kt_both << " vs baseline=" << kt_base << "; truth spread "
       << r.truth_spread << "; " << (r.seconds / 60.0) << " min";
    detail = os.str();
    return gv_ok && kt_ok && budget_ok;
}

bool criterion_ablation_order(const ExperimentResult& r, std::string& detail) {
    const double base = mean(r.kt[0]);
    const double pa = mean(r.kt[1]);
    const double da = mean(r.kt[2]);
    const double both = mean(r.kt[3]);
    const bool pa_ok = pa >= base - 0.02;
    const bool da_ok = da >= base - 0.02;
    const bool both_max = both >= base && both >= pa && both >= da;
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << "mean KT baseline=" << base << " path-only=" << pa << " data-only=" << da
       << " both=" << both << " | path-only>=base-0.02: " << (pa_ok ? "yes" : "NO")
       << ", data-only>=base-0.02: " << (da_ok ? "yes" : "NO")
       << ", both is max: " << (both_max ? "yes" : "NO");
    detail = os.str();
    return pa_ok && da_ok && both_max;
}

// ---------------------------------------------------------------------------
// 9. Byte determinism and lossless resume.
// ---------------------------------------------------------------------------

std::string read_file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool criterion_determinism_resume(std::string& detail) {
    const CellSpec spec = CellSpec::make(4, {OpKind::Skip, OpKind::Linear}, 8, 8, 4);
    const SyntheticSplit data = generate_synthetic_split(24, 12, 4, 8, 2.0, 1.0, 55);
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.batch_size = 16;
    cfg.base_lr = 0.005;
    cfg.min_lr = 0.0;
    cfg.momentum = 0.9;
    cfg.weight_decay = 1e-4;
    cfg.master_seed = 77;  // both samplers stay enabled: the full method
                           // must be deterministic, not just the baseline

    SupernetTrainer a(spec, cfg, data.train);
    a.run_to_end();
    SupernetTrainer b(spec, cfg, data.train);
    b.run_to_end();
    if (metrics_history_csv(a.history()) != metrics_history_csv(b.history())) {
        detail = "two identical fresh runs differ in their metrics CSV";
        return false;
    }
    for (const auto& [name, t] : a.net().params) {
        const Tensor& u = b.net().params.at(name);
        for (std::size_t i = 0; i < t.data.size(); ++i)
            if (t.data[i] != u.data[i]) {
                detail = "fresh-run weights differ at " + name;
                return false;
            }
    }

    const auto tmp = std::filesystem::temp_directory_path();
    const auto mid_ck = tmp / "pada_acceptance_mid.ckpt";
    const auto one_ck = tmp / "pada_acceptance_oneshot.ckpt";
    const auto res_ck = tmp / "pada_acceptance_resumed.ckpt";

    SupernetTrainer half(spec, cfg, data.train);
    while (half.epochs_done() < 4) half.run_epoch();
    half.save_checkpoint(mid_ck.string());
    const std::string first_half_csv = metrics_history_csv(half.history());

    SupernetTrainer resumed =
        SupernetTrainer::resume_from_checkpoint(mid_ck.string(), spec, cfg, data.train);
    resumed.run_to_end();
    resumed.save_checkpoint(res_ck.string());
    a.save_checkpoint(one_ck.string());

    // the resumed history holds only post-resume rows; the concatenation
    // must reproduce the one-shot CSV byte for byte
    std::string stitched = first_half_csv;
    for (const auto& row : resumed.history()) stitched += metrics_row_csv(row) + "\n";
    const std::string oneshot = metrics_history_csv(a.history());

    const bool csv_ok = stitched == oneshot;
    const bool ck_ok = read_file_bytes(one_ck) == read_file_bytes(res_ck);
    std::error_code ec;
    std::filesystem::remove(mid_ck, ec);
    std::filesystem::remove(one_ck, ec);
    std::filesystem::remove(res_ck, ec);

    if (!csv_ok) {
        detail = "resumed metrics CSV differs from the uninterrupted run";
        return false;
    }
    if (!ck_ok) {
        detail = "resumed final checkpoint differs from the uninterrupted run";
        return false;
    }
    detail = "fresh-run CSVs byte-identical; resume reproduces CSV and checkpoint bytes";
    return true;
}

// ---------------------------------------------------------------------------
// 10. Both samplers off degenerates to the uniform single-path baseline.
// ---------------------------------------------------------------------------

bool criterion_baseline_degeneracy(std::string& detail) {
    const CellSpec spec = CellSpec::make(4, {OpKind::Skip, OpKind::Linear}, 8, 8, 4);
    const SyntheticSplit data = generate_synthetic_split(24, 12, 4, 8, 2.0, 1.0, 55);
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.batch_size = 16;
    cfg.base_lr = 0.005;
    cfg.min_lr = 0.0;
    cfg.momentum = 0.9;
    cfg.weight_decay = 1e-4;
    cfg.master_seed = 11;
    cfg.pa.enabled = false;
    cfg.da.enabled = false;

    SupernetTrainer trainer(spec, cfg, data.train);
    trainer.run_to_end();

    // reference loop from the documented contract: one uniform per edge for
    // the path, one shuffled pass over the data per epoch
    RngStream init_rng(cfg.master_seed, "init");
    Supernet net = build_supernet(spec, init_rng);
    RngStream path_rng(cfg.master_seed, "path");
    RngStream data_rng(cfg.master_seed, "data");
    OptimizerState opt;
    opt.base_lr = cfg.base_lr;
    opt.momentum_coef = cfg.momentum;
    opt.weight_decay = cfg.weight_decay;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cosine_lr(epoch, cfg.epochs, cfg.base_lr, cfg.min_lr);
        std::vector<std::size_t> order(data.train.n());
        std::iota(order.begin(), order.end(), 0);
        data_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
            const std::size_t end = std::min(at + cfg.batch_size, order.size());
            Path p;
            p.op_index.resize(spec.n_edges());
            for (auto& k : p.op_index) k = path_rng.uniform() < 0.5 ? 0 : 1;
            const Batch batch = make_batch(
                data.train, {order.begin() + static_cast<std::ptrdiff_t>(at),
                             order.begin() + static_cast<std::ptrdiff_t>(end)});
            const auto fwd = forward(net.params, spec, p, batch);
            const auto bwd = backward(net.params, spec, p, batch, fwd.cache);
            sgd_step(net.params, bwd.grads, opt, lr);
            loss_sum += bwd.loss;
            ++steps;
        }
        const MetricsRow& row = trainer.history()[epoch];
        if (row.mean_loss != loss_sum / static_cast<double>(steps)) {
            detail = "mean loss diverges from the reference at epoch " +
                     std::to_string(epoch);
            return false;
        }
        if (row.delta != 0.0 || row.tau != 0.0) {
            detail = "schedules advanced while both samplers were off";
            return false;
        }
    }
    for (const auto& [name, t] : net.params) {
        const Tensor& got = trainer.net().params.at(name);
        for (std::size_t i = 0; i < t.data.size(); ++i)
            if (got.data[i] != t.data[i]) {
                detail = "weights differ from the reference at " + name;
                return false;
            }
    }
    detail = "losses, schedules, and every weight bit match the reference loop";
    return true;
}

struct Criterion {
    const char* name;
    std::function<bool(std::string&)> run;
};

}  // namespace

int main() {
    // The experiment backing criteria 7 and 8 runs once and feeds both.
    std::printf("running the four-cell sampling experiment (5 seeds + oracle)...\n");
    std::fflush(stdout);
    ExperimentResult experiment;
    std::string experiment_error;
    try {
        experiment = run_experiment();
    } catch (const std::exception& e) {
        experiment_error = e.what();
    }

    const std::vector<Criterion> criteria = {
        {"simplex weights attain the 0.001-grid optimum", criterion_simplex_weights},
        {"reweighted path gradients are unbiased over exact enumeration",
         criterion_reweight_unbiased},
        {"analytic gradients match central finite differences",
         criterion_fd_gradients},
        {"last-layer shortcut equals the batch-scaled logits gradient",
         criterion_last_layer_shortcut},
        {"ranking metrics match brute-force references", criterion_ranking_metrics},
        {"streaming gradient variance matches two-pass recomputation",
         criterion_gv_two_pass},
        {"importance sampling lowers variance and keeps ranking consistency",
         [&](std::string& d) {
             if (!experiment_error.empty()) {
                 d = "experiment failed: " + experiment_error;
                 return false;
             }
             return criterion_variance_and_ranking(experiment, d);
         }},
        {"ablation cells rank with the combined sampler on top",
         [&](std::string& d) {
             if (!experiment_error.empty()) {
                 d = "experiment failed: " + experiment_error;
                 return false;
             }
             return criterion_ablation_order(experiment, d);
         }},
        {"seeded runs are byte-deterministic and resume losslessly",
         criterion_determinism_resume},
        {"disabling both samplers reproduces the uniform baseline",
         criterion_baseline_degeneracy},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const double t0 = now_seconds();
        std::string detail;
        bool ok = false;
        try {
            ok = criteria[i].run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double dt = now_seconds() - t0;
        std::printf("[%s] %2zu. %s (%s; %.1fs)\n", ok ? "PASS" : "FAIL", i + 1,
                    criteria[i].name, detail.c_str(), dt);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    std::printf("%d/10 criteria passed\n", 10 - failures);
    return failures;
}
