#pragma once

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>

#include "coinlab/core/bytes.hpp"

namespace coinlab {

using Sha256 = std::array<std::uint8_t, 32>;
// Truncated SHA-256, used for message digests in broadcast votes.
using Digest = std::array<std::uint8_t, 16>;

inline Sha256 sha256(std::span<const std::uint8_t> data) {
  Sha256 out{};
  SHA256(data.data(), data.size(), out.data());
  return out;
}

inline Digest digest_of(std::span<const std::uint8_t> data) {
  auto full = sha256(data);
  Digest d{};
  std::memcpy(d.data(), full.data(), d.size());
  return d;
}

// Non-cryptographic 64-bit payload fingerprint for trace lines.
inline std::uint64_t fnv1a64(std::span<const std::uint8_t> data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : data) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <std::size_t N>
std::string to_hex(const std::array<std::uint8_t, N>& bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(2 * N);
  for (auto b : bytes) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 15]);
  }
  return s;
}

// Incremental SHA-256 over text lines.
class LineHasher {
 public:
  LineHasher() : ctx_(EVP_MD_CTX_new()) { EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr); }
  ~LineHasher() { EVP_MD_CTX_free(ctx_); }
  LineHasher(const LineHasher&) = delete;
  LineHasher& operator=(const LineHasher&) = delete;

  void add(std::string_view line) {
    EVP_DigestUpdate(ctx_, line.data(), line.size());
    EVP_DigestUpdate(ctx_, "\n", 1);
  }

  Sha256 finish() {
    Sha256 out{};
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx_, out.data(), &len);
    EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr);
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace coinlab
