#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <string_view>

#include "cotsel/error.hpp"

namespace cotsel {

// Incremental SHA-256 whose digest is reported as the leading 128 bits in
// lowercase hex. Used for record ids, cache keys, and manifest digests.
class ContentHasher {
 public:
  ContentHasher() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error("sha256 init failed");
    }
  }

  ContentHasher& update(std::string_view bytes) {
    if (EVP_DigestUpdate(ctx_.get(), bytes.data(), bytes.size()) != 1) {
      throw Error("sha256 update failed");
    }
    return *this;
  }

  // Field separator; keeps ("ab","c") and ("a","bc") apart.
  ContentHasher& separator() { return update(std::string_view("\x1f", 1)); }

  std::string hex128() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1 || len < 16) {
      throw Error("sha256 final failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(32, '0');
    for (int i = 0; i < 16; ++i) {
      out[2 * i] = kHex[md[i] >> 4];
      out[2 * i + 1] = kHex[md[i] & 0xf];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline std::string hash128(std::string_view bytes) {
  return ContentHasher().update(bytes).hex128();
}

template <class... Parts>
std::string hash_fields(std::string_view first, const Parts&... rest) {
  ContentHasher h;
  h.update(first);
  ((h.separator().update(std::string_view(rest))), ...);
  return h.hex128();
}

// Digest of a file's bytes, read in chunks.
inline std::string file_digest(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) throw IoError("cannot read " + path);
  ContentHasher h;
  std::array<char, 1 << 16> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), f)) > 0) {
    h.update(std::string_view(buf.data(), n));
  }
  std::fclose(f);
  return h.hex128();
}

}  // namespace cotsel
