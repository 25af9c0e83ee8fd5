// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Output plumbing shared by the commands: atomic writes, CSV files tagged
// with the config hash, and per-command manifests guarded by an
// `.incomplete` marker.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace dpdmd {

inline constexpr int kManifestSchemaVersion = 1;

/// Writes to `<path>.tmp` and renames over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

/// `# config_hash=<hash>` line, the header, then rows.
std::string csv_document(const std::string& config_hash, const std::string& header,
                         const std::vector<std::string>& rows);

struct RunManifest {
  std::string command;
  std::string config_hash;
  /// (name, CRC-64 hex of the checkpoint bytes)
  std::vector<std::pair<std::string, std::string>> checkpoints;
  std::vector<std::string> metric_files;
  double wall_clock_ms = 0.0;

  std::string to_json() const;
};

/// Creates `<dir>/<command>.incomplete` on construction. commit() writes
/// `<dir>/<command>.manifest.json` atomically and removes the marker; if the
/// run dies first the marker stays and no manifest exists.
class RunGuard {
 public:
  RunGuard(std::filesystem::path dir, std::string command);
  RunGuard(const RunGuard&) = delete;
  RunGuard& operator=(const RunGuard&) = delete;

  void commit(const RunManifest& manifest);
  const std::filesystem::path& dir() const { return dir_; }

  static std::filesystem::path marker_path(const std::filesystem::path& dir,
                                           const std::string& command);
  static std::filesystem::path manifest_path(const std::filesystem::path& dir,
                                             const std::string& command);

 private:
  std::filesystem::path dir_;
  std::string command_;
  bool committed_ = false;
};

/// CRC-64 hex of a file's bytes.
std::string file_hash(const std::filesystem::path& path);

}  // namespace dpdmd
