// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dpdmd/run_io.hpp"

#include <fstream>
#include <iterator>
#include <system_error>

#include <json.hpp>

#include "dpdmd/crc64.hpp"
#include "dpdmd/error.hpp"

namespace dpdmd {

namespace fs = std::filesystem;

void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write " + tmp.string());
    os << text;
    if (!os) throw Error("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error("cannot move " + tmp.string() + " to " + path.string());
}

std::string csv_document(const std::string& config_hash, const std::string& header,
                         const std::vector<std::string>& rows) {
  std::string out = "# config_hash=" + config_hash + "\n" + header + "\n";
  for (const auto& r : rows) out += r + "\n";
  return out;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = kManifestSchemaVersion;
  j["command"] = command;
  j["config_hash"] = config_hash;
  nlohmann::ordered_json ck = nlohmann::ordered_json::object();
  for (const auto& [name, hash] : checkpoints) ck[name] = hash;
  j["checkpoints"] = ck;
  j["metric_files"] = metric_files;
  j["wall_clock_ms"] = wall_clock_ms;
  return j.dump(2) + "\n";
}

fs::path RunGuard::marker_path(const fs::path& dir, const std::string& command) {
  return dir / (command + ".incomplete");
}

fs::path RunGuard::manifest_path(const fs::path& dir, const std::string& command) {
  return dir / (command + ".manifest.json");
}

RunGuard::RunGuard(fs::path dir, std::string command)
    : dir_(std::move(dir)), command_(std::move(command)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error("cannot create output directory " + dir_.string() + ": " + ec.message());
  fs::remove(manifest_path(dir_, command_), ec);
  std::ofstream marker(marker_path(dir_, command_), std::ios::trunc);
  if (!marker) throw Error("output directory " + dir_.string() + " is not writable");
}

void RunGuard::commit(const RunManifest& manifest) {
  write_text_atomic(manifest_path(dir_, command_), manifest.to_json());
  std::error_code ec;
  fs::remove(marker_path(dir_, command_), ec);
  committed_ = true;
}

std::string file_hash(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifactError("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  return hex64(content_hash(bytes));
}

}  // namespace dpdmd
