// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace dpdmd {

/// CRC-64/XZ (ECMA-182 polynomial, reflected, init and xorout all ones).
/// crc64("123456789") == 0x995DC9BBDF1939FA.
std::uint64_t crc64(std::span<const std::uint8_t> bytes, std::uint64_t crc = 0);
std::uint64_t crc64(std::string_view text);

/// FNV-1a 64 digest. A CRC of a buffer that ends in its own CRC is a constant,
/// so files carrying a CRC trailer are fingerprinted with this instead.
/// content_hash("a") == 0xAF63DC4C8601EC8C.
std::uint64_t content_hash(std::span<const std::uint8_t> bytes);

/// 16 lowercase hex digits.
std::string hex64(std::uint64_t value);

}  // namespace dpdmd
