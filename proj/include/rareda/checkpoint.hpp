#pragma once

// Checkpoint container, little-endian throughout:
//
//   magic        8 bytes  "RAREDACK"
//   version      u32      kCheckpointVersion
//   config_hash  u64
//   epoch        u64
//   n_metrics    u32, then per metric: u32 name_len, name bytes, f64 value
//   3 × part     (F, C, D): u8 activation, u8 activate_output, u32 n_layers
//   n_arrays     u32, then per array: u32 name_len, name bytes, u32 rows,
//                u32 cols, rows·cols × f64 (row-major)
//   checksum     u64      FNV-1a of every preceding byte
//
// Arrays appear in parameters() order ("F.0.weight", "F.0.bias", ...).
// A sidecar "<path>.json" repeats the header fields for humans.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rareda/model.hpp"

namespace rareda {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  std::size_t epoch = 0;
  std::uint64_t config_hash = 0;
  std::vector<std::pair<std::string, double>> metrics;
};

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path);

/// Throws Error on a missing, truncated, corrupt or wrong-version file; never
/// returns partially read state.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// A warning message when the checkpoint was written under a different config.
std::optional<std::string> config_hash_warning(const Checkpoint& cp, std::uint64_t expected);

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint_path);

}  // namespace rareda
