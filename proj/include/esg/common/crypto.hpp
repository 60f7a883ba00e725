#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace esg {

using Bytes = std::vector<std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);
Digest hmac_sha256(std::span<const std::uint8_t> key,
                   std::span<const std::uint8_t> data);

std::string to_hex(std::span<const std::uint8_t> data);
std::optional<Digest> digest_from_hex(std::string_view hex);

/// Standard alphabet with padding.
std::string base64_encode(std::span<const std::uint8_t> data);
/// Strict: rejects anything that would not re-encode to the same text.
std::optional<Bytes> base64_decode(std::string_view text);

Bytes random_bytes(std::size_t n);

/// AES-256-GCM under a PBKDF2-derived key. Output carries salt and nonce.
Bytes seal_with_passphrase(std::string_view passphrase,
                           std::span<const std::uint8_t> plaintext);
std::optional<Bytes> open_with_passphrase(std::string_view passphrase,
                                          std::span<const std::uint8_t> sealed);

bool constant_time_equal(std::span<const std::uint8_t> a,
                         std::span<const std::uint8_t> b);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace esg
