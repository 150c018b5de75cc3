#include "pada/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <limits>
#include <vector>

#include "pada/errors.hpp"

namespace pada {
namespace {

void put_bytes(std::string& out, const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
}

void put_u16(std::string& out, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v),
                                static_cast<unsigned char>(v >> 8)};
    put_bytes(out, b, 2);
}

void put_u32(std::string& out, std::uint32_t v) {
    const unsigned char b[4] = {
        static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    put_bytes(out, b, 4);
}

void put_f64(std::string& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    put_bytes(out, b, 8);
}

struct Reader {
    const std::string& buf;
    const std::string& path;
    std::size_t at = 0;

    void need(std::size_t n, const char* what) const {
        if (at + n > buf.size())
            throw IoError(path + ": truncated at byte " + std::to_string(at) +
                          " (reading " + what + ")");
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        const auto* b = reinterpret_cast<const unsigned char*>(buf.data() + at);
        at += 2;
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        const auto* b = reinterpret_cast<const unsigned char*>(buf.data() + at);
        at += 4;
        return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
               (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return static_cast<std::uint8_t>(buf[at++]);
    }
    double f64(const char* what) {
        need(8, what);
        const auto* b = reinterpret_cast<const unsigned char*>(buf.data() + at);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
        at += 8;
        return std::bit_cast<double>(v);
    }
    std::string bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string s = buf.substr(at, n);
        at += n;
        return s;
    }
};

}  // namespace

double u64_as_f64(std::uint64_t v) { return std::bit_cast<double>(v); }
std::uint64_t f64_as_u64(double v) { return std::bit_cast<std::uint64_t>(v); }

void save_checkpoint_file(const std::string& path,
                          const std::map<std::string, Tensor>& entries) {
    std::string out;
    out += "PADA";
    put_u32(out, kCheckpointVersion);
    if (entries.size() > std::numeric_limits<std::uint32_t>::max())
        throw UsageError("save_checkpoint_file: too many entries");
    put_u32(out, static_cast<std::uint32_t>(entries.size()));
    for (const auto& [name, t] : entries) {
        if (name.size() > std::numeric_limits<std::uint16_t>::max())
            throw UsageError("save_checkpoint_file: entry name too long: " + name);
        if (t.shape.size() > 255)
            throw UsageError("save_checkpoint_file: too many dims for " + name);
        put_u16(out, static_cast<std::uint16_t>(name.size()));
        put_bytes(out, name.data(), name.size());
        out.push_back(static_cast<char>(t.shape.size()));
        for (std::size_t d : t.shape) {
            if (d > std::numeric_limits<std::uint32_t>::max())
                throw UsageError("save_checkpoint_file: dim too large for " + name);
            put_u32(out, static_cast<std::uint32_t>(d));
        }
        if (t.data.size() != t.numel())
            throw UsageError("save_checkpoint_file: malformed tensor " + name);
        for (double v : t.data) put_f64(out, v);
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write checkpoint: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + path);
}

std::map<std::string, Tensor> load_checkpoint_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());

    Reader r{buf, path};
    const std::string magic = r.bytes(4, "magic");
    if (magic != "PADA")
        throw IoError(path + ": bad magic at byte 0 (not a checkpoint file)");
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion)
        throw IoError(path + ": unsupported format version " + std::to_string(version) +
                      " (expected " + std::to_string(kCheckpointVersion) + ")");
    const std::uint32_t count = r.u32("entry count");

    std::map<std::string, Tensor> entries;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t entry_at = r.at;
        const std::uint16_t name_len = r.u16("name length");
        const std::string name = r.bytes(name_len, "entry name");
        const std::uint8_t ndim = r.u8("ndim");
        Tensor t;
        t.shape.resize(ndim);
        std::size_t numel = 1;
        for (std::uint8_t d = 0; d < ndim; ++d) {
            t.shape[d] = r.u32("dim");
            numel *= t.shape[d];
        }
        t.data.resize(numel);
        r.need(numel * 8, "payload");
        for (std::size_t k = 0; k < numel; ++k) t.data[k] = r.f64("payload");
        if (!entries.emplace(name, std::move(t)).second)
            throw IoError(path + ": duplicate entry '" + name + "' at byte " +
                          std::to_string(entry_at));
    }
    if (r.at != buf.size())
        throw IoError(path + ": trailing bytes at byte " + std::to_string(r.at));
    return entries;
}

Supernet supernet_from_checkpoint(const std::string& path, const CellSpec& spec) {
    const std::map<std::string, Tensor> entries = load_checkpoint_file(path);
    RngStream throwaway(0, "shape-template");
    Supernet net = build_supernet(spec, throwaway);
    for (auto& [name, t] : net.params) {
        auto it = entries.find("param." + name);
        if (it == entries.end())
            throw IoError(path + ": checkpoint missing entry 'param." + name + "'");
        if (it->second.shape != t.shape)
            throw IoError(path + ": entry 'param." + name + "' has wrong shape");
        t = it->second;
    }
    return net;
}

}  // namespace pada
