#include "esg/common/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <memory>

#include "esg/common/error.hpp"

namespace esg {
namespace {

constexpr std::size_t kSaltLen = 16;
constexpr std::size_t kNonceLen = 12;
constexpr std::size_t kTagLen = 16;
constexpr int kKdfIterations = 20000;

std::array<std::uint8_t, 32> derive_key(std::string_view passphrase,
                                        std::span<const std::uint8_t> salt) {
  std::array<std::uint8_t, 32> key{};
  if (PKCS5_PBKDF2_HMAC(passphrase.data(), static_cast<int>(passphrase.size()),
                        salt.data(), static_cast<int>(salt.size()),
                        kKdfIterations, EVP_sha256(),
                        static_cast<int>(key.size()), key.data()) != 1) {
    throw Error(Errc::unavailable, "key derivation failed");
  }
  return key;
}

using CipherCtx =
    std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;

}  // namespace

Digest sha256(std::span<const std::uint8_t> data) {
  Digest out{};
  SHA256(data.data(), data.size(), out.data());
  return out;
}

Digest sha256(std::string_view data) { return sha256(as_bytes(data)); }

Digest hmac_sha256(std::span<const std::uint8_t> key,
                   std::span<const std::uint8_t> data) {
  Digest out{};
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(),
       data.size(), out.data(), &len);
  return out;
}

std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

std::optional<Digest> digest_from_hex(std::string_view hex) {
  if (hex.size() != 64) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  Digest out{};
  for (std::size_t i = 0; i < 32; ++i) {
    int hi = nibble(hex[2 * i]);
    int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          data.data(), static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::optional<Bytes> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) return std::nullopt;
  Bytes out(text.size() / 4 * 3);
  int n = EVP_DecodeBlock(out.data(),
                          reinterpret_cast<const unsigned char*>(text.data()),
                          static_cast<int>(text.size()));
  if (n < 0) return std::nullopt;
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  // EVP_DecodeBlock ignores surrounding whitespace and unused trailing bits.
  if (base64_encode(out) != text) return std::nullopt;
  return out;
}

Bytes random_bytes(std::size_t n) {
  Bytes out(n);
  if (n > 0 && RAND_bytes(out.data(), static_cast<int>(n)) != 1) {
    throw Error(Errc::unavailable, "random source failed");
  }
  return out;
}

Bytes seal_with_passphrase(std::string_view passphrase,
                           std::span<const std::uint8_t> plaintext) {
  Bytes salt = random_bytes(kSaltLen);
  Bytes nonce = random_bytes(kNonceLen);
  auto key = derive_key(passphrase, salt);

  CipherCtx ctx(EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free);
  Bytes out;
  out.insert(out.end(), salt.begin(), salt.end());
  out.insert(out.end(), nonce.begin(), nonce.end());
  std::size_t header = out.size();
  out.resize(header + plaintext.size() + kTagLen);

  int len = 0;
  int total = 0;
  bool ok =
      EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(),
                         nonce.data()) == 1 &&
      EVP_EncryptUpdate(ctx.get(), out.data() + header, &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) == 1;
  total = len;
  ok = ok && EVP_EncryptFinal_ex(ctx.get(), out.data() + header + total,
                                 &len) == 1;
  total += len;
  ok = ok && EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG,
                                 static_cast<int>(kTagLen),
                                 out.data() + header + total) == 1;
  if (!ok) throw Error(Errc::unavailable, "encryption failed");
  return out;
}

std::optional<Bytes> open_with_passphrase(
    std::string_view passphrase, std::span<const std::uint8_t> sealed) {
  if (sealed.size() < kSaltLen + kNonceLen + kTagLen) return std::nullopt;
  auto salt = sealed.subspan(0, kSaltLen);
  auto nonce = sealed.subspan(kSaltLen, kNonceLen);
  auto body = sealed.subspan(kSaltLen + kNonceLen,
                             sealed.size() - kSaltLen - kNonceLen - kTagLen);
  auto tag = sealed.subspan(sealed.size() - kTagLen);
  auto key = derive_key(passphrase, salt);

  CipherCtx ctx(EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free);
  Bytes out(body.size() + 16);
  int len = 0;
  int total = 0;
  Bytes tag_copy(tag.begin(), tag.end());
  bool ok =
      EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(),
                         nonce.data()) == 1 &&
      EVP_DecryptUpdate(ctx.get(), out.data(), &len, body.data(),
                        static_cast<int>(body.size())) == 1;
  total = len;
  ok = ok && EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG,
                                 static_cast<int>(kTagLen),
                                 tag_copy.data()) == 1;
  ok = ok && EVP_DecryptFinal_ex(ctx.get(), out.data() + total, &len) == 1;
  if (!ok) return std::nullopt;
  total += len;
  out.resize(static_cast<std::size_t>(total));
  return out;
}

bool constant_time_equal(std::span<const std::uint8_t> a,
                         std::span<const std::uint8_t> b) {
  return a.size() == b.size() && CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace esg
