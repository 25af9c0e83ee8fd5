// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Little-endian checkpoint layout:
//   "DPDMDCKP" | u32 version (1) | u32 role
//   | u32 input_dim | u32 hidden_width | u32 depth | u32 time_embed_dim
//   | u32 activation | u8 prediction_mode
//   | per parameter tensor: u32 rank, u64 extents[rank], f64 payload
//   | u64 CRC-64/XZ of all preceding bytes

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "dpdmd/error.hpp"
#include "dpdmd/network.hpp"

namespace dpdmd {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public Error {
 public:
  enum class Kind { kIo, kBadMagic, kUnsupportedVersion, kTruncated, kChecksumMismatch,
                    kShapeMismatch, kCorrupt };

  CheckpointError(Kind kind, const std::string& what);
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(CheckpointError::Kind kind);

std::vector<std::uint8_t> serialize(const VelocityNet& net);
/// `expected` additionally requires the stored config to match.
VelocityNet deserialize(std::span<const std::uint8_t> bytes,
                        const std::optional<NetConfig>& expected = std::nullopt);

/// Writes to a sibling temporary file and renames it into place.
void save_checkpoint(const VelocityNet& net, const std::filesystem::path& path);
VelocityNet load_checkpoint(const std::filesystem::path& path,
                            const std::optional<NetConfig>& expected = std::nullopt);

/// content_hash of the serialized checkpoint bytes (hex); equals file_hash of
/// the saved file.
std::string checkpoint_hash(const VelocityNet& net);

}  // namespace dpdmd
