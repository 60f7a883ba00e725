#pragma once

#include <cstdint>
#include <span>

#include "esg/common/crypto.hpp"
#include "esg/gridfmt/dataset.hpp"

namespace esg::gridfmt {

/// ESGN v1: "ESGN", version byte 0x01, u32le header length, compact JSON
/// header with fixed key order, then little-endian row-major payload.
inline constexpr std::uint8_t kFormatVersion = 1;
inline constexpr std::size_t kPrefixSize = 9;

Bytes write_dataset(const GridDataset& ds);

/// Only canonical encodings are accepted, so write(read(b)) == b.
GridDataset read_dataset(std::span<const std::uint8_t> bytes);

/// SHA-256 of the bytes.
Digest checksum(std::span<const std::uint8_t> bytes);

}  // namespace esg::gridfmt
