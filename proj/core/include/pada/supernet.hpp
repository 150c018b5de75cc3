#pragma once

#include <string>
#include <vector>

#include "pada/nn.hpp"
#include "pada/rng.hpp"
#include "pada/search_space.hpp"
#include "pada/tensor.hpp"

namespace pada {

// The shared weight store: one tensor set per parameterized (edge, op)
// plus stem and classifier. Two paths choosing the same op on the same
// edge literally read the same entries — that is the whole point.
struct Supernet {
    CellSpec spec;
    ParamMap params;
};

// Fan-in init: matrices uniform in +-sqrt(6/shape[0]), vectors (biases)
// zero. Shared by supernet construction and standalone models so both
// start from the same family.
Tensor init_param_tensor(const std::vector<std::size_t>& shape, RngStream& rng);

// Deterministic init from the given stream. Draw order is the canonical
// name order: stem.W, stem.b, cls.W, cls.b, then edges in spec order,
// ops in menu order, tensors in op_param_shapes order.
Supernet build_supernet(const CellSpec& spec, RngStream& rng);

// Names of the parameters a path trains: stem/cls plus its chosen ops.
std::vector<std::string> path_params(const Supernet& net, const Path& path);

// A copy-free stand-in for "inherit W_alpha": the sub-model described by
// `path` evaluated against the shared store.
struct InheritedModel {
    const Supernet* net = nullptr;
    Path path;

    Tensor forward_logits(const Batch& batch) const;
};

InheritedModel inherit_weights(const Supernet& net, const Path& path);

}  // namespace pada
