// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dpdmd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <system_error>

#include "dpdmd/crc64.hpp"

namespace dpdmd {

namespace {

constexpr char kMagic[8] = {'D', 'P', 'D', 'M', 'D', 'C', 'K', 'P'};
// magic + version + role + five u32 config fields + u8 mode tag
constexpr std::size_t kHeaderSize = 8 + 4 + 4 + 5 * 4 + 1;

using Kind = CheckpointError::Kind;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t remaining() const { return in_.size() - pos_; }
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw CheckpointError(Kind::kTruncated, std::string("checkpoint truncated while reading ") +
                                                  what);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return in_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::size_t expected_size(const NetConfig& cfg) {
  std::size_t n = kHeaderSize;
  for (const auto& s : cfg.parameter_shapes()) n += 4 + 8 * s.size() + 8 * ad::shape_size(s);
  return n + 8;
}

}  // namespace

CheckpointError::CheckpointError(Kind kind, const std::string& what)
    : Error(what), kind_(kind) {}

const char* to_string(CheckpointError::Kind kind) {
  switch (kind) {
    case Kind::kIo: return "io";
    case Kind::kBadMagic: return "bad magic";
    case Kind::kUnsupportedVersion: return "unsupported version";
    case Kind::kTruncated: return "truncated";
    case Kind::kChecksumMismatch: return "checksum mismatch";
    case Kind::kShapeMismatch: return "shape mismatch";
    case Kind::kCorrupt: return "corrupt";
  }
  return "?";
}

std::vector<std::uint8_t> serialize(const VelocityNet& net) {
  const NetConfig& cfg = net.config();
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(net.role()));
  w.u32(cfg.input_dim);
  w.u32(cfg.hidden_width);
  w.u32(cfg.depth);
  w.u32(cfg.time_embed_dim);
  w.u32(static_cast<std::uint32_t>(cfg.activation));
  w.u8(static_cast<std::uint8_t>(cfg.prediction_mode));
  for (const auto& p : net.parameters()) {
    w.u32(static_cast<std::uint32_t>(p.rank()));
    for (std::size_t e : p.shape()) w.u64(e);
    for (double v : p.values()) w.f64(v);
  }
  auto& bytes = w.buffer();
  const std::uint64_t crc = crc64(bytes);
  w.u64(crc);
  return std::move(bytes);
}

VelocityNet deserialize(std::span<const std::uint8_t> bytes,
                        const std::optional<NetConfig>& expected) {
  if (bytes.size() < sizeof kMagic) {
    throw CheckpointError(Kind::kTruncated, "checkpoint shorter than its magic");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError(Kind::kBadMagic, "bad magic: not a DPDMDCKP checkpoint");
  }
  Reader r(bytes.subspan(sizeof kMagic));
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(Kind::kUnsupportedVersion,
                          "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t role = r.u32("role");
  NetConfig cfg;
  cfg.input_dim = r.u32("config");
  cfg.hidden_width = r.u32("config");
  cfg.depth = r.u32("config");
  cfg.time_embed_dim = r.u32("config");
  cfg.activation = static_cast<Activation>(r.u32("config"));
  cfg.prediction_mode = static_cast<PredictionMode>(r.u8("config"));
  if (role > static_cast<std::uint32_t>(Role::kStudent)) {
    throw CheckpointError(Kind::kCorrupt, "invalid role tag " + std::to_string(role));
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(Kind::kCorrupt, std::string("invalid stored config: ") + e.what());
  }
  // Huge stored extents would overflow the size computation; a depth this
  // large is corrupt anyway.
  if (cfg.depth > 4096 || cfg.hidden_width > (1u << 20) || cfg.input_dim > (1u << 20) ||
      cfg.time_embed_dim > (1u << 20)) {
    throw CheckpointError(Kind::kCorrupt, "stored config extents are implausibly large");
  }

  const std::size_t want = expected_size(cfg);
  if (bytes.size() < kHeaderSize + 8) {
    throw CheckpointError(Kind::kTruncated, "checkpoint truncated inside its header");
  }
  const std::size_t body = bytes.size() - 8;
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(bytes[body + i]) << (8 * i);
  if (crc64(bytes.first(body)) != stored) {
    if (bytes.size() < want) {
      throw CheckpointError(Kind::kTruncated, "checkpoint truncated: " +
                                                  std::to_string(bytes.size()) + " of " +
                                                  std::to_string(want) + " bytes");
    }
    throw CheckpointError(Kind::kChecksumMismatch, "checkpoint checksum mismatch");
  }

  if (expected && !(*expected == cfg)) {
    throw CheckpointError(
        Kind::kShapeMismatch,
        "checkpoint config (dim " + std::to_string(cfg.input_dim) + ", width " +
            std::to_string(cfg.hidden_width) + ", depth " + std::to_string(cfg.depth) +
            ", embed " + std::to_string(cfg.time_embed_dim) + ", " +
            to_string(cfg.prediction_mode) + ") does not match the requested config (dim " +
            std::to_string(expected->input_dim) + ", width " +
            std::to_string(expected->hidden_width) + ", depth " +
            std::to_string(expected->depth) + ", embed " +
            std::to_string(expected->time_embed_dim) + ", " +
            to_string(expected->prediction_mode) + ")");
  }

  Reader payload(bytes.subspan(kHeaderSize, body - kHeaderSize));
  std::vector<ad::Tensor> params;
  for (const auto& shape : cfg.parameter_shapes()) {
    const std::uint32_t rank = payload.u32("tensor rank");
    ad::Shape stored_shape;
    if (rank != shape.size()) {
      throw CheckpointError(Kind::kShapeMismatch,
                            "tensor " + std::to_string(params.size()) + " has rank " +
                                std::to_string(rank) + ", config implies " +
                                ad::shape_string(shape));
    }
    for (std::uint32_t i = 0; i < rank; ++i) stored_shape.push_back(payload.u64("extent"));
    if (stored_shape != shape) {
      throw CheckpointError(Kind::kShapeMismatch,
                            "tensor " + std::to_string(params.size()) + " stored as " +
                                ad::shape_string(stored_shape) + ", config implies " +
                                ad::shape_string(shape));
    }
    std::vector<double> values(ad::shape_size(shape));
    for (auto& v : values) v = payload.f64("tensor payload");
    params.emplace_back(shape, std::move(values));
  }
  if (payload.remaining() != 0) {
    throw CheckpointError(Kind::kCorrupt, "checkpoint has " +
                                              std::to_string(payload.remaining()) +
                                              " unexpected trailing bytes");
  }
  return VelocityNet(cfg, static_cast<Role>(role), std::move(params));
}

void save_checkpoint(const VelocityNet& net, const std::filesystem::path& path) {
  const auto bytes = serialize(net);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError(Kind::kIo, "cannot write checkpoint " + tmp.string());
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os) throw CheckpointError(Kind::kIo, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError(Kind::kIo, "cannot move checkpoint into " + path.string());
}

VelocityNet load_checkpoint(const std::filesystem::path& path,
                            const std::optional<NetConfig>& expected) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError(Kind::kIo, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  try {
    return deserialize(bytes, expected);
  } catch (const CheckpointError& e) {
    throw CheckpointError(e.kind(), path.string() + ": " + e.what());
  }
}

std::string checkpoint_hash(const VelocityNet& net) { return hex64(content_hash(serialize(net))); }

}  // namespace dpdmd
