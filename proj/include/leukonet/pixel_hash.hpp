#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <string>

#include "leukonet/errors.hpp"
#include "leukonet/image.hpp"

namespace leukonet {

/// SHA-256 over (width, height, channels, pixel bytes) of the decoded
/// raster. A function of pixels, not file bytes, so lossless re-encoding
/// does not change it. Returned as lowercase hex.
inline std::string pixel_hash(const ImageU8& img) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw IoFailure("cannot allocate digest context");

  std::array<std::uint8_t, 12> header{};
  const auto put = [&](int offset, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
      header[static_cast<std::size_t>(offset + i)] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xff);
  };
  put(0, static_cast<std::uint32_t>(img.width));
  put(4, static_cast<std::uint32_t>(img.height));
  put(8, static_cast<std::uint32_t>(ImageU8::channels));

  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int digest_len = 0;
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, img.data.data(), img.data.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest.data(), &digest_len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw IoFailure("SHA-256 computation failed");

  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * digest_len);
  for (unsigned int i = 0; i < digest_len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace leukonet
