#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace pada {

// Dense row-major tensor of doubles. Matrices are stored [rows, cols];
// a weight between layers of width `in` and `out` has shape [in, out]
// so the forward pass is x (1 x in) times W (in x out).
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s);

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

    std::size_t numel() const;

    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

// Parameters and gradients keyed by name ("stem.W", "edge3.op1.b", ...).
// std::map keeps iteration order deterministic.
using ParamMap = std::map<std::string, Tensor>;
using GradientSet = std::map<std::string, Tensor>;

// One minibatch: inputs [B, d_in], labels [B], and the position of each
// row in the originating dataset (needed to accumulate per-sample
// importance back into the full-dataset distribution).
struct Batch {
    Tensor inputs;
    std::vector<std::size_t> labels;
    std::vector<std::size_t> sample_ids;

    std::size_t size() const { return labels.size(); }
};

}  // namespace pada
