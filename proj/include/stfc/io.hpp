#pragma once

#include <string>

#include "stfc/core.hpp"

namespace stfc::io {

// Feature file ("STFC"): magic, u32 version, u64 n, u32 d, u32 reserved,
// then n*d little-endian 32-bit floats, row-major.
void write_features(const FeatureSet& fs, const std::string& path);
FeatureSet read_features(const std::string& path);

// Label file: UTF-8 text, one decimal integer per line, newline-terminated.
void write_labels(const Partition& p, const std::string& path);
Partition read_labels(const std::string& path);

// Canonicalizes labels first, then writes a label file in input-row order.
void write_partition(const Partition& p, const std::string& path);

// Model checkpoint ("STFM"): magic, u32 version, u32 tensor count, per tensor
// (u32 rows, u32 cols, rows*cols little-endian 64-bit floats), then u32 CRC32
// of the tensor payload.
void write_model(const EdgeModel& m, const std::string& path);
EdgeModel read_model(const std::string& path);

}  // namespace stfc::io
