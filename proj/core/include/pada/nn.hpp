#pragma once

#include <cstddef>

#include "pada/search_space.hpp"
#include "pada/tensor.hpp"

namespace pada {

// Activations retained by forward() so backward() can be exact. Tied to
// the (path, batch) pair it was built from; backward checks the match.
struct ForwardCache {
    Path path;
    std::size_t batch_size = 0;
    std::vector<Tensor> node_values;  // [n_nodes] tensors of shape [B, h]
    struct EdgeCache {
        Tensor act;     // linear_relu: relu output; mlp2: hidden relu output
    };
    std::vector<EdgeCache> edge_caches;  // indexed by edge
    Tensor logits;                       // [B, n_classes]
};

struct ForwardResult {
    Tensor logits;
    ForwardCache cache;
};

// Runs the cell on one batch through the given path. Parameters are read
// by name from `params` (a full shared store or a path-restricted subset
// both work). Throws ConfigError on shape mismatch, NumericError naming
// the stage that first produced a non-finite value.
ForwardResult forward(const ParamMap& params, const CellSpec& spec, const Path& path,
                      const Batch& batch);

struct BackwardResult {
    double loss = 0.0;          // mean cross-entropy over the batch
    GradientSet grads;          // exactly the on-path params + stem/cls
    Tensor last_layer_grad;     // [B, n_classes], softmax(y_L) - onehot(y), per
                                // sample and NOT divided by batch size
};

BackwardResult backward(const ParamMap& params, const CellSpec& spec, const Path& path,
                        const Batch& batch, const ForwardCache& cache);

// SGD with momentum and decoupled-from-nothing classic weight decay:
//   v <- m*v + g + wd*w ;  w <- w - lr*v
// Only parameters present in grads move; momentum buffers are created on
// first use and never touched for absent parameters.
struct OptimizerState {
    ParamMap momentum;
    double base_lr = 0.05;
    double min_lr = 0.0;
    double momentum_coef = 0.9;
    double weight_decay = 0.0;
    std::size_t step_count = 0;
    std::size_t epoch_count = 0;
};

void sgd_step(ParamMap& weights, const GradientSet& grads, OptimizerState& opt,
              double lr);

// lr = min + 0.5*(base-min)*(1 + cos(pi*epoch/total)).
double cosine_lr(std::size_t epoch, std::size_t total_epochs, double base_lr,
                 double min_lr);

// Row-wise stable softmax (max subtraction); rows sum to 1.
Tensor softmax_rows(const Tensor& logits);

}  // namespace pada
