#include "pada/search_space.hpp"

#include <limits>
#include <sstream>

#include "pada/errors.hpp"

namespace pada {

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::Zero: return "zero";
        case OpKind::Skip: return "skip";
        case OpKind::Linear: return "linear";
        case OpKind::LinearRelu: return "linear_relu";
        case OpKind::Mlp2: return "mlp2";
    }
    throw UsageError("op_name: invalid OpKind");
}

OpKind op_from_name(const std::string& name) {
    if (name == "zero") return OpKind::Zero;
    if (name == "skip") return OpKind::Skip;
    if (name == "linear") return OpKind::Linear;
    if (name == "linear_relu") return OpKind::LinearRelu;
    if (name == "mlp2") return OpKind::Mlp2;
    throw ConfigError("unknown op name '" + name +
                      "' (expected zero|skip|linear|linear_relu|mlp2)");
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> op_param_shapes(
    OpKind k, std::size_t h) {
    switch (k) {
        case OpKind::Zero:
        case OpKind::Skip:
            return {};
        case OpKind::Linear:
        case OpKind::LinearRelu:
            return {{"W", {h, h}}, {"b", {h}}};
        case OpKind::Mlp2:
            return {{"W1", {h, h / 2}}, {"b1", {h / 2}}, {"W2", {h / 2, h}}, {"b2", {h}}};
    }
    throw UsageError("op_param_shapes: invalid OpKind");
}

std::size_t op_param_count(OpKind k, std::size_t h) {
    std::size_t n = 0;
    for (const auto& [name, shape] : op_param_shapes(k, h)) {
        std::size_t m = 1;
        for (std::size_t d : shape) m *= d;
        n += m;
    }
    return n;
}

CellSpec CellSpec::make(std::size_t n_nodes, std::vector<OpKind> ops,
                        std::size_t hidden_dim, std::size_t d_in,
                        std::size_t n_classes) {
    CellSpec spec;
    spec.n_nodes = n_nodes;
    spec.ops = std::move(ops);
    spec.hidden_dim = hidden_dim;
    spec.d_in = d_in;
    spec.n_classes = n_classes;
    for (std::size_t i = 0; i < n_nodes; ++i)
        for (std::size_t j = i + 1; j < n_nodes; ++j) spec.edges.emplace_back(i, j);
    spec.validate();
    return spec;
}

std::size_t CellSpec::space_size() const {
    std::size_t total = 1;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (total > std::numeric_limits<std::size_t>::max() / ops.size())
            return std::numeric_limits<std::size_t>::max();
        total *= ops.size();
    }
    return total;
}

void CellSpec::validate() const {
    if (n_nodes < 2) throw ConfigError("CellSpec: n_nodes must be at least 2");
    if (ops.empty()) throw ConfigError("CellSpec: ops_per_edge must be nonempty");
    if (hidden_dim == 0 || d_in == 0 || n_classes == 0)
        throw ConfigError("CellSpec: hidden_dim, d_in, n_classes must be positive");
    for (const auto& [src, dst] : edges) {
        if (src >= dst) throw ConfigError("CellSpec: edge src must be < dst");
        if (dst >= n_nodes) throw ConfigError("CellSpec: edge dst out of range");
    }
    for (OpKind k : ops) {
        if (k == OpKind::Mlp2 && hidden_dim % 2 != 0)
            throw ConfigError("CellSpec: mlp2 requires even hidden_dim, got " +
                              std::to_string(hidden_dim));
    }
}

std::string Path::to_string() const {
    std::string s;
    for (std::size_t e = 0; e < op_index.size(); ++e) {
        if (e) s += ',';
        s += std::to_string(op_index[e]);
    }
    return s;
}

Path Path::parse(const std::string& s) {
    Path p;
    if (s.empty()) throw ConfigError("Path::parse: empty string");
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos
                                                                   : comma - pos);
        if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
            throw ConfigError("Path::parse: bad token '" + tok + "' in '" + s + "'");
        p.op_index.push_back(std::stoul(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return p;
}

void Path::validate(const CellSpec& spec) const {
    if (op_index.size() != spec.n_edges())
        throw UsageError("Path has " + std::to_string(op_index.size()) +
                         " edges, spec expects " + std::to_string(spec.n_edges()));
    for (std::size_t v : op_index) {
        if (v >= spec.n_ops())
            throw UsageError("Path op index " + std::to_string(v) +
                             " out of range [0," + std::to_string(spec.n_ops()) + ")");
    }
}

std::vector<Path> enumerate_paths(const CellSpec& spec) {
    const std::size_t total = spec.space_size();
    if (total > spec.enumeration_cap) {
        std::ostringstream msg;
        msg << "enumerate_paths: space size " << total << " exceeds cap "
            << spec.enumeration_cap << "; sample instead of enumerating";
        throw UsageError(msg.str());
    }
    std::vector<Path> out;
    out.reserve(total);
    Path cur;
    cur.op_index.assign(spec.n_edges(), 0);
    for (std::size_t i = 0; i < total; ++i) {
        out.push_back(cur);
        // odometer increment, last edge fastest -> lexicographic order
        for (std::size_t e = spec.n_edges(); e-- > 0;) {
            if (++cur.op_index[e] < spec.n_ops()) break;
            cur.op_index[e] = 0;
        }
    }
    return out;
}

Path mutate(const Path& p, double rate, const CellSpec& spec, RngStream& rng) {
    p.validate(spec);
    if (rate < 0.0 || rate > 1.0)
        throw UsageError("mutate: rate must be in [0,1], got " + std::to_string(rate));
    Path out = p;
    for (std::size_t e = 0; e < spec.n_edges(); ++e) {
        const double gate = rng.uniform();  // drawn unconditionally
        if (gate < rate) out.op_index[e] = rng.below(spec.n_ops());
    }
    return out;
}

Path crossover(const Path& a, const Path& b, const CellSpec& spec, RngStream& rng) {
    a.validate(spec);
    b.validate(spec);
    Path out;
    out.op_index.resize(spec.n_edges());
    for (std::size_t e = 0; e < spec.n_edges(); ++e)
        out.op_index[e] = rng.uniform() < 0.5 ? a.op_index[e] : b.op_index[e];
    return out;
}

std::size_t path_param_count(const CellSpec& spec, const Path& p) {
    p.validate(spec);
    const std::size_t h = spec.hidden_dim;
    std::size_t n = spec.d_in * h + h;          // stem
    n += h * spec.n_classes + spec.n_classes;   // classifier
    for (std::size_t v : p.op_index) n += op_param_count(spec.ops[v], h);
    return n;
}

}  // namespace pada
