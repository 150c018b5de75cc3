#include "pada/supernet.hpp"

#include <cmath>

#include "pada/errors.hpp"

namespace pada {

Tensor init_param_tensor(const std::vector<std::size_t>& shape, RngStream& rng) {
    Tensor t(shape);
    if (shape.size() == 1) return t;  // biases start at zero
    const double bound = std::sqrt(6.0 / static_cast<double>(shape[0]));
    for (double& v : t.data) v = (2.0 * rng.uniform() - 1.0) * bound;
    return t;
}

Supernet build_supernet(const CellSpec& spec, RngStream& rng) {
    spec.validate();
    Supernet net;
    net.spec = spec;
    const std::size_t h = spec.hidden_dim;

    net.params["stem.W"] = init_param_tensor({spec.d_in, h}, rng);
    net.params["stem.b"] = init_param_tensor({h}, rng);
    net.params["cls.W"] = init_param_tensor({h, spec.n_classes}, rng);
    net.params["cls.b"] = init_param_tensor({spec.n_classes}, rng);

    for (std::size_t e = 0; e < spec.n_edges(); ++e) {
        for (std::size_t k = 0; k < spec.n_ops(); ++k) {
            const std::string pfx =
                "edge" + std::to_string(e) + ".op" + std::to_string(k) + ".";
            for (const auto& [name, shape] : op_param_shapes(spec.ops[k], h))
                net.params[pfx + name] = init_param_tensor(shape, rng);
        }
    }
    return net;
}

std::vector<std::string> path_params(const Supernet& net, const Path& path) {
    path.validate(net.spec);
    std::vector<std::string> names = {"stem.W", "stem.b", "cls.W", "cls.b"};
    for (std::size_t e = 0; e < net.spec.n_edges(); ++e) {
        const std::size_t k = path.op_index[e];
        const std::string pfx =
            "edge" + std::to_string(e) + ".op" + std::to_string(k) + ".";
        for (const auto& [name, shape] : op_param_shapes(net.spec.ops[k], net.spec.hidden_dim))
            names.push_back(pfx + name);
    }
    return names;
}

Tensor InheritedModel::forward_logits(const Batch& batch) const {
    if (net == nullptr) throw UsageError("InheritedModel: not bound to a supernet");
    return forward(net->params, net->spec, path, batch).logits;
}

InheritedModel inherit_weights(const Supernet& net, const Path& path) {
    path.validate(net.spec);
    return InheritedModel{&net, path};
}

}  // namespace pada
