#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "pada/supernet.hpp"
#include "pada/tensor.hpp"

namespace pada {

// On-disk format: magic "PADA", format version u32 LE, entry count u32
// LE, then per entry: name length u16 LE, name bytes, ndim u8, dims u32
// LE each, payload little-endian f64. Entries are written sorted by
// name, so saving identical state yields identical bytes. Non-float
// state (rng words, counters, flags) rides along bit_cast into f64.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint_file(const std::string& path,
                          const std::map<std::string, Tensor>& entries);

// Parses the whole file before returning; on any defect (bad magic,
// version, truncation, duplicate names, trailing bytes) throws IoError
// naming the byte offset — never partial state.
std::map<std::string, Tensor> load_checkpoint_file(const std::string& path);

// Exact u64 <-> f64 carriers for non-numeric payloads.
double u64_as_f64(std::uint64_t v);
std::uint64_t f64_as_u64(double v);

// Rebuilds just the shared weight store from a training checkpoint
// (the param.* entries), for evaluation and search; trainer bookkeeping
// entries are ignored. Shapes are validated against the spec.
Supernet supernet_from_checkpoint(const std::string& path, const CellSpec& spec);

}  // namespace pada
