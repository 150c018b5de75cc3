#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pada/rng.hpp"

namespace pada {

// Candidate operations on a cell edge. Dense analogs of the usual cell
// search-space menu: a parameter-free pair plus three learned maps.
enum class OpKind { Zero, Skip, Linear, LinearRelu, Mlp2 };

const char* op_name(OpKind k);
OpKind op_from_name(const std::string& name);  // throws ConfigError on unknown

// Named shapes of the tensors an op owns at hidden width h; empty for
// zero/skip. Order is fixed (it defines init and serialization order).
std::vector<std::pair<std::string, std::vector<std::size_t>>> op_param_shapes(
    OpKind k, std::size_t h);

std::size_t op_param_count(OpKind k, std::size_t h);

// Cell topology: n_nodes DAG nodes, one edge per ordered pair (i,j) with
// i<j, the same candidate-op menu on every edge. Node 0 is the stem
// output; node_j = sum over i<j of op_{(i,j)}(node_i); the cell output
// is the last node, which feeds the classifier.
struct CellSpec {
    std::size_t n_nodes = 4;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // (src,dst), src<dst
    std::vector<OpKind> ops;                                 // menu per edge
    std::size_t hidden_dim = 16;
    std::size_t d_in = 16;
    std::size_t n_classes = 4;
    std::size_t enumeration_cap = 20000;

    static CellSpec make(std::size_t n_nodes, std::vector<OpKind> ops,
                         std::size_t hidden_dim, std::size_t d_in,
                         std::size_t n_classes);

    std::size_t n_edges() const { return edges.size(); }
    std::size_t n_ops() const { return ops.size(); }
    // |A| = |ops|^|edges|, or SIZE_MAX on overflow.
    std::size_t space_size() const;
    void validate() const;  // throws ConfigError
};

// One sub-model: an op choice per edge, in the spec's edge order.
struct Path {
    std::vector<std::size_t> op_index;

    bool operator==(const Path&) const = default;
    bool operator<(const Path& other) const { return op_index < other.op_index; }

    std::string to_string() const;                    // "1,0,1,1,0,1"
    static Path parse(const std::string& s);          // throws ConfigError
    void validate(const CellSpec& spec) const;        // throws UsageError
};

// All paths in lexicographic order (last edge varies fastest). Refuses
// when the space exceeds spec.enumeration_cap.
std::vector<Path> enumerate_paths(const CellSpec& spec);

// Each edge independently resampled (uniformly over the menu) with
// probability `rate`. The gate uniform is always drawn so the stream
// position doesn't depend on prior outcomes.
Path mutate(const Path& p, double rate, const CellSpec& spec, RngStream& rng);

// Uniform per-edge choice between the two parents.
Path crossover(const Path& a, const Path& b, const CellSpec& spec, RngStream& rng);

// Parameters a standalone model of this path would hold:
// stem + classifier + the chosen op on every edge.
std::size_t path_param_count(const CellSpec& spec, const Path& p);

}  // namespace pada
