#include "pada/nn.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pada/errors.hpp"

namespace pada {
namespace {

// out[B,n] = A[B,m] * W[m,n], ikj order so the inner loop streams rows.
Tensor matmul(const Tensor& A, const Tensor& W) {
    const std::size_t B = A.shape[0], m = A.shape[1], n = W.shape[1];
    if (W.shape[0] != m)
        throw ConfigError("matmul: inner dims " + std::to_string(m) + " vs " +
                          std::to_string(W.shape[0]));
    Tensor out({B, n});
    for (std::size_t i = 0; i < B; ++i) {
        const double* a = &A.data[i * m];
        double* o = &out.data[i * n];
        for (std::size_t k = 0; k < m; ++k) {
            const double aik = a[k];
            const double* w = &W.data[k * n];
            for (std::size_t j = 0; j < n; ++j) o[j] += aik * w[j];
        }
    }
    return out;
}

// out[B,m] = A[B,n] * W[m,n]^T
Tensor matmul_nt(const Tensor& A, const Tensor& W) {
    const std::size_t B = A.shape[0], n = A.shape[1], m = W.shape[0];
    if (W.shape[1] != n)
        throw ConfigError("matmul_nt: inner dims mismatch");
    Tensor out({B, m});
    for (std::size_t i = 0; i < B; ++i) {
        const double* a = &A.data[i * n];
        double* o = &out.data[i * m];
        for (std::size_t k = 0; k < m; ++k) {
            const double* w = &W.data[k * n];
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += a[j] * w[j];
            o[k] = s;
        }
    }
    return out;
}

// out[m,n] = A[B,m]^T * C[B,n]
Tensor matmul_tn(const Tensor& A, const Tensor& C) {
    const std::size_t B = A.shape[0], m = A.shape[1], n = C.shape[1];
    if (C.shape[0] != B)
        throw ConfigError("matmul_tn: batch dims mismatch");
    Tensor out({m, n});
    for (std::size_t i = 0; i < B; ++i) {
        const double* a = &A.data[i * m];
        const double* c = &C.data[i * n];
        for (std::size_t k = 0; k < m; ++k) {
            const double aik = a[k];
            double* o = &out.data[k * n];
            for (std::size_t j = 0; j < n; ++j) o[j] += aik * c[j];
        }
    }
    return out;
}

Tensor colsum(const Tensor& A) {
    const std::size_t B = A.shape[0], n = A.shape[1];
    Tensor out({n});
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t j = 0; j < n; ++j) out.data[j] += A.data[i * n + j];
    return out;
}

void add_bias(Tensor& A, const Tensor& b) {
    const std::size_t B = A.shape[0], n = A.shape[1];
    if (b.numel() != n) throw ConfigError("bias length mismatch");
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t j = 0; j < n; ++j) A.data[i * n + j] += b.data[j];
}

void add_into(Tensor& dst, const Tensor& src) {
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

const Tensor& named(const ParamMap& params, const std::string& name) {
    auto it = params.find(name);
    if (it == params.end())
        throw UsageError("missing parameter '" + name + "' in weight store");
    return it->second;
}

std::string edge_prefix(std::size_t e, std::size_t op) {
    return "edge" + std::to_string(e) + ".op" + std::to_string(op) + ".";
}

void check_finite(const Tensor& t, const std::string& stage) {
    if (!t.all_finite())
        throw NumericError("non-finite values produced at " + stage);
}

}  // namespace

ForwardResult forward(const ParamMap& params, const CellSpec& spec, const Path& path,
                      const Batch& batch) {
    path.validate(spec);
    const std::size_t B = batch.size();
    if (batch.inputs.shape.size() != 2 || batch.inputs.shape[0] != B ||
        batch.inputs.shape[1] != spec.d_in)
        throw ConfigError("forward: batch inputs must be [B, d_in=" +
                          std::to_string(spec.d_in) + "]");
    for (std::size_t y : batch.labels)
        if (y >= spec.n_classes) throw ConfigError("forward: label out of range");

    ForwardCache cache;
    cache.path = path;
    cache.batch_size = B;
    cache.edge_caches.resize(spec.n_edges());
    const std::size_t h = spec.hidden_dim;

    cache.node_values.assign(spec.n_nodes, Tensor({B, h}));
    // stem: node 0
    {
        Tensor z = matmul(batch.inputs, named(params, "stem.W"));
        add_bias(z, named(params, "stem.b"));
        check_finite(z, "stem.W");
        cache.node_values[0] = std::move(z);
    }

    // nodes in topological order; each edge contributes op(node_src)
    for (std::size_t j = 1; j < spec.n_nodes; ++j) {
        for (std::size_t e = 0; e < spec.n_edges(); ++e) {
            if (spec.edges[e].second != j) continue;
            const std::size_t src = spec.edges[e].first;
            const std::size_t k = path.op_index[e];
            const Tensor& in = cache.node_values[src];
            const std::string pfx = edge_prefix(e, k);
            switch (spec.ops[k]) {
                case OpKind::Zero:
                    break;
                case OpKind::Skip:
                    add_into(cache.node_values[j], in);
                    break;
                case OpKind::Linear: {
                    Tensor z = matmul(in, named(params, pfx + "W"));
                    add_bias(z, named(params, pfx + "b"));
                    check_finite(z, pfx + "W");
                    add_into(cache.node_values[j], z);
                    break;
                }
                case OpKind::LinearRelu: {
                    Tensor z = matmul(in, named(params, pfx + "W"));
                    add_bias(z, named(params, pfx + "b"));
                    for (double& v : z.data) v = v > 0.0 ? v : 0.0;
                    check_finite(z, pfx + "W");
                    add_into(cache.node_values[j], z);
                    cache.edge_caches[e].act = std::move(z);
                    break;
                }
                case OpKind::Mlp2: {
                    Tensor h1 = matmul(in, named(params, pfx + "W1"));
                    add_bias(h1, named(params, pfx + "b1"));
                    for (double& v : h1.data) v = v > 0.0 ? v : 0.0;
                    Tensor z = matmul(h1, named(params, pfx + "W2"));
                    add_bias(z, named(params, pfx + "b2"));
                    check_finite(z, pfx + "W2");
                    add_into(cache.node_values[j], z);
                    cache.edge_caches[e].act = std::move(h1);
                    break;
                }
            }
        }
    }

    Tensor logits = matmul(cache.node_values[spec.n_nodes - 1], named(params, "cls.W"));
    add_bias(logits, named(params, "cls.b"));
    check_finite(logits, "cls.W");
    cache.logits = logits;
    return {std::move(logits), std::move(cache)};
}

BackwardResult backward(const ParamMap& params, const CellSpec& spec, const Path& path,
                        const Batch& batch, const ForwardCache& cache) {
    if (!(cache.path == path) || cache.batch_size != batch.size())
        throw UsageError("backward: cache does not match this (path, batch)");
    const std::size_t B = batch.size();
    const std::size_t C = spec.n_classes;

    BackwardResult out;
    Tensor probs = softmax_rows(cache.logits);

    // loss (mean CE via log-sum-exp) and the per-sample last-layer grad
    out.last_layer_grad = probs;
    double loss = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        const double* row = &cache.logits.data[i * C];
        double mx = row[0];
        for (std::size_t j = 1; j < C; ++j) mx = std::max(mx, row[j]);
        double se = 0.0;
        for (std::size_t j = 0; j < C; ++j) se += std::exp(row[j] - mx);
        loss += mx + std::log(se) - row[batch.labels[i]];
        out.last_layer_grad.data[i * C + batch.labels[i]] -= 1.0;
    }
    out.loss = loss / static_cast<double>(B);

    // d(mean loss)/d(logits) = last_layer_grad / B
    Tensor dlogits = out.last_layer_grad;
    for (double& v : dlogits.data) v /= static_cast<double>(B);

    const Tensor& cell_out = cache.node_values[spec.n_nodes - 1];
    out.grads["cls.W"] = matmul_tn(cell_out, dlogits);
    out.grads["cls.b"] = colsum(dlogits);

    std::vector<Tensor> dnode(spec.n_nodes);
    for (auto& t : dnode) t = Tensor({B, spec.hidden_dim});
    dnode[spec.n_nodes - 1] = matmul_nt(dlogits, named(params, "cls.W"));

    for (std::size_t j = spec.n_nodes; j-- > 1;) {
        const Tensor& dj = dnode[j];
        for (std::size_t e = spec.n_edges(); e-- > 0;) {
            if (spec.edges[e].second != j) continue;
            const std::size_t src = spec.edges[e].first;
            const std::size_t k = path.op_index[e];
            const Tensor& in = cache.node_values[src];
            const std::string pfx = edge_prefix(e, k);
            switch (spec.ops[k]) {
                case OpKind::Zero:
                    break;
                case OpKind::Skip:
                    add_into(dnode[src], dj);
                    break;
                case OpKind::Linear: {
                    out.grads[pfx + "W"] = matmul_tn(in, dj);
                    out.grads[pfx + "b"] = colsum(dj);
                    add_into(dnode[src], matmul_nt(dj, named(params, pfx + "W")));
                    break;
                }
                case OpKind::LinearRelu: {
                    Tensor dz = dj;
                    const Tensor& act = cache.edge_caches[e].act;
                    for (std::size_t i = 0; i < dz.data.size(); ++i)
                        if (act.data[i] <= 0.0) dz.data[i] = 0.0;
                    out.grads[pfx + "W"] = matmul_tn(in, dz);
                    out.grads[pfx + "b"] = colsum(dz);
                    add_into(dnode[src], matmul_nt(dz, named(params, pfx + "W")));
                    break;
                }
                case OpKind::Mlp2: {
                    const Tensor& h1 = cache.edge_caches[e].act;
                    out.grads[pfx + "W2"] = matmul_tn(h1, dj);
                    out.grads[pfx + "b2"] = colsum(dj);
                    Tensor dh1 = matmul_nt(dj, named(params, pfx + "W2"));
                    for (std::size_t i = 0; i < dh1.data.size(); ++i)
                        if (h1.data[i] <= 0.0) dh1.data[i] = 0.0;
                    out.grads[pfx + "W1"] = matmul_tn(in, dh1);
                    out.grads[pfx + "b1"] = colsum(dh1);
                    add_into(dnode[src], matmul_nt(dh1, named(params, pfx + "W1")));
                    break;
                }
            }
        }
    }

    out.grads["stem.W"] = matmul_tn(batch.inputs, dnode[0]);
    out.grads["stem.b"] = colsum(dnode[0]);
    return out;
}

void sgd_step(ParamMap& weights, const GradientSet& grads, OptimizerState& opt,
              double lr) {
    if (lr <= 0.0) throw UsageError("sgd_step: lr must be positive");
    for (const auto& [name, g] : grads) {
        auto wit = weights.find(name);
        if (wit == weights.end())
            throw UsageError("sgd_step: gradient for unknown parameter '" + name + "'");
        Tensor& w = wit->second;
        if (!w.same_shape(g))
            throw ConfigError("sgd_step: shape mismatch for '" + name + "'");
        Tensor& v = opt.momentum.try_emplace(name, Tensor(w.shape)).first->second;
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            v.data[i] = opt.momentum_coef * v.data[i] + g.data[i] +
                        opt.weight_decay * w.data[i];
            w.data[i] -= lr * v.data[i];
        }
    }
    ++opt.step_count;
}

double cosine_lr(std::size_t epoch, std::size_t total_epochs, double base_lr,
                 double min_lr) {
    if (total_epochs == 0) throw ConfigError("cosine_lr: total_epochs must be positive");
    if (epoch >= total_epochs)
        throw UsageError("cosine_lr: epoch " + std::to_string(epoch) +
                         " out of range [0," + std::to_string(total_epochs) + ")");
    const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs);
    return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + std::cos(std::numbers::pi * t));
}

Tensor softmax_rows(const Tensor& logits) {
    const std::size_t B = logits.shape[0], C = logits.shape[1];
    Tensor out({B, C});
    for (std::size_t i = 0; i < B; ++i) {
        const double* row = &logits.data[i * C];
        double* o = &out.data[i * C];
        double mx = row[0];
        for (std::size_t j = 1; j < C; ++j) mx = std::max(mx, row[j]);
        double se = 0.0;
        for (std::size_t j = 0; j < C; ++j) {
            o[j] = std::exp(row[j] - mx);
            se += o[j];
        }
        for (std::size_t j = 0; j < C; ++j) o[j] /= se;
    }
    return out;
}

}  // namespace pada
