#include "pada/dataset.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>

#include "pada/errors.hpp"
#include "pada/rng.hpp"

namespace pada {
namespace {

void fnv_bytes(std::uint64_t& h, const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 0x100000001b3ULL;
    }
}

void fnv_u64(std::uint64_t& h, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    fnv_bytes(h, b, 8);
}

std::uint32_t read_u32_be(std::istream& in, const std::string& path,
                          std::size_t offset) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw IoError(path + ": truncated at byte " + std::to_string(offset) +
                      " (expected 4-byte big-endian field)");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

std::uint64_t Dataset::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    fnv_u64(h, n());
    fnv_u64(h, d_in());
    for (std::size_t y : labels) fnv_u64(h, y);
    for (double v : inputs.data) fnv_u64(h, std::bit_cast<std::uint64_t>(v));
    return h;
}

Dataset generate_synthetic(std::size_t n_per_class, std::size_t n_classes,
                           std::size_t d_in, double separation, double noise,
                           std::uint64_t seed) {
    return generate_synthetic_split(n_per_class, 0, n_classes, d_in, separation,
                                    noise, seed)
        .train;
}

SyntheticSplit generate_synthetic_split(std::size_t n_train_per_class,
                                        std::size_t n_eval_per_class,
                                        std::size_t n_classes, std::size_t d_in,
                                        double separation, double noise,
                                        std::uint64_t seed) {
    if (n_train_per_class == 0 || n_classes == 0 || d_in == 0)
        throw ConfigError("generate_synthetic: counts and dims must be positive");
    if (separation < 0.0 || noise < 0.0)
        throw ConfigError("generate_synthetic: separation and noise must be >= 0");

    RngStream rng(seed, "synthetic-data");
    // all class means first, then samples, so train/eval share means
    std::vector<std::vector<double>> means(n_classes, std::vector<double>(d_in));
    for (auto& m : means)
        for (double& v : m) v = separation * rng.normal();

    std::ostringstream prov;
    prov << "synthetic(classes=" << n_classes << ",d_in=" << d_in
         << ",separation=" << separation << ",noise=" << noise << ",seed=" << seed
         << ")";

    auto fill = [&](std::size_t per_class, const char* split) {
        Dataset ds;
        ds.split = split;
        ds.provenance = prov.str();
        ds.inputs = Tensor({per_class * n_classes, d_in});
        ds.labels.resize(per_class * n_classes);
        std::size_t row = 0;
        for (std::size_t c = 0; c < n_classes; ++c) {
            for (std::size_t i = 0; i < per_class; ++i, ++row) {
                ds.labels[row] = c;
                for (std::size_t d = 0; d < d_in; ++d)
                    ds.inputs.data[row * d_in + d] = means[c][d] + noise * rng.normal();
            }
        }
        return ds;
    };

    SyntheticSplit out;
    out.train = fill(n_train_per_class, "train");
    out.eval = fill(n_eval_per_class, "eval");
    return out;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t limit, bool normalize) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot open images file: " + images_path);
    const std::uint32_t img_magic = read_u32_be(img, images_path, 0);
    if (img_magic != 0x00000803)
        throw IoError(images_path + ": bad magic at byte 0 (got " +
                      std::to_string(img_magic) + ", expected 2051)");
    const std::uint32_t n_img = read_u32_be(img, images_path, 4);
    const std::uint32_t rows = read_u32_be(img, images_path, 8);
    const std::uint32_t cols = read_u32_be(img, images_path, 12);

    std::ifstream lbl(labels_path, std::ios::binary);
    if (!lbl) throw IoError("cannot open labels file: " + labels_path);
    const std::uint32_t lbl_magic = read_u32_be(lbl, labels_path, 0);
    if (lbl_magic != 0x00000801)
        throw IoError(labels_path + ": bad magic at byte 0 (got " +
                      std::to_string(lbl_magic) + ", expected 2049)");
    const std::uint32_t n_lbl = read_u32_be(lbl, labels_path, 4);

    if (n_img != n_lbl)
        throw IoError("IDX count mismatch: " + images_path + " has " +
                      std::to_string(n_img) + " images, " + labels_path + " has " +
                      std::to_string(n_lbl) + " labels");

    const std::size_t n = limit == 0 ? n_img : std::min<std::size_t>(limit, n_img);
    const std::size_t d = std::size_t(rows) * cols;

    Dataset ds;
    ds.split = "train";
    ds.provenance = "idx(" + images_path + "," + labels_path + ")";
    ds.inputs = Tensor({n, d});
    ds.labels.resize(n);

    std::vector<unsigned char> pix(d);
    for (std::size_t i = 0; i < n; ++i) {
        if (!img.read(reinterpret_cast<char*>(pix.data()), static_cast<std::streamsize>(d)))
            throw IoError(images_path + ": truncated at byte " +
                          std::to_string(16 + i * d) + " (image " + std::to_string(i) +
                          ")");
        for (std::size_t j = 0; j < d; ++j)
            ds.inputs.data[i * d + j] =
                normalize ? static_cast<double>(pix[j]) / 255.0
                          : static_cast<double>(pix[j]);
        char c;
        if (!lbl.read(&c, 1))
            throw IoError(labels_path + ": truncated at byte " + std::to_string(8 + i));
        ds.labels[i] = static_cast<unsigned char>(c);
    }
    return ds;
}

void save_idx(const Dataset& ds, const std::string& images_path,
              const std::string& labels_path) {
    if (ds.n() == 0) throw UsageError("save_idx: empty dataset");
    double lo = ds.inputs.data[0], hi = ds.inputs.data[0];
    for (double v : ds.inputs.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;

    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot write images file: " + images_path);
    write_u32_be(img, 0x00000803);
    write_u32_be(img, static_cast<std::uint32_t>(ds.n()));
    write_u32_be(img, static_cast<std::uint32_t>(ds.d_in()));
    write_u32_be(img, 1);
    for (double v : ds.inputs.data) {
        const double q = (v - lo) / span * 255.0;
        img.put(static_cast<char>(static_cast<unsigned char>(q + 0.5)));
    }
    if (!img) throw IoError("write failed: " + images_path);

    std::ofstream lbl(labels_path, std::ios::binary);
    if (!lbl) throw IoError("cannot write labels file: " + labels_path);
    write_u32_be(lbl, 0x00000801);
    write_u32_be(lbl, static_cast<std::uint32_t>(ds.n()));
    for (std::size_t y : ds.labels) lbl.put(static_cast<char>(static_cast<unsigned char>(y)));
    if (!lbl) throw IoError("write failed: " + labels_path);
}

Batch make_batch(const Dataset& ds, const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw UsageError("make_batch: empty index list");
    const std::size_t d = ds.d_in();
    Batch b;
    b.inputs = Tensor({indices.size(), d});
    b.labels.resize(indices.size());
    b.sample_ids = indices;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t id = indices[i];
        if (id >= ds.n()) throw UsageError("make_batch: index out of range");
        std::copy_n(&ds.inputs.data[id * d], d, &b.inputs.data[i * d]);
        b.labels[i] = ds.labels[id];
    }
    return b;
}

}  // namespace pada
