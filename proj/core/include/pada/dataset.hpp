#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pada/tensor.hpp"

namespace pada {

struct Dataset {
    Tensor inputs;                    // [N, d_in]
    std::vector<std::size_t> labels;  // length N
    std::string split;                // "train" | "eval"
    std::string provenance;           // synthetic params or source file paths

    std::size_t n() const { return labels.size(); }
    std::size_t d_in() const { return inputs.shape.empty() ? 0 : inputs.shape[1]; }

    // Content hash over dims, labels, and input bytes; recorded in the
    // run manifest so resumed/re-run experiments can prove they saw the
    // same data.
    std::uint64_t fingerprint() const;
};

// Gaussian blobs: each class mean is drawn once (d_in standard normals
// scaled by `separation`), then every sample is mean + noise * normal.
// Class-major layout, one labeled row per sample, fully determined by
// the seed.
Dataset generate_synthetic(std::size_t n_per_class, std::size_t n_classes,
                           std::size_t d_in, double separation, double noise,
                           std::uint64_t seed);

// Train and eval splits sharing the same class means (the eval samples
// continue the same stream, so the splits are disjoint by construction).
struct SyntheticSplit {
    Dataset train;
    Dataset eval;
};
SyntheticSplit generate_synthetic_split(std::size_t n_train_per_class,
                                        std::size_t n_eval_per_class,
                                        std::size_t n_classes, std::size_t d_in,
                                        double separation, double noise,
                                        std::uint64_t seed);

// IDX binary ingestion (images magic 0x00000803, labels 0x00000801,
// big-endian dims, u8 payload). limit = 0 means "all". normalize scales
// pixels to [0,1]. Parse failures name the byte offset.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t limit, bool normalize);

// Writes the dataset as an IDX pair (inputs min/max-quantized to u8,
// shape N x d_in x 1). Lossy in value, loadable by load_idx.
void save_idx(const Dataset& ds, const std::string& images_path,
              const std::string& labels_path);

// Gathers the given dataset rows into a batch; sample_ids = indices.
Batch make_batch(const Dataset& ds, const std::vector<std::size_t>& indices);

}  // namespace pada
