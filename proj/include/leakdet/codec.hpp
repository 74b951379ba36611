#pragma once

#include <openssl/evp.h>

#include <array>
#include <cctype>
#include <string>
#include <string_view>

#include "leakdet/error.hpp"

namespace leakdet {

inline std::string to_hex(const unsigned char* data, std::size_t n, bool upper = false) {
  const char* digits = upper ? "0123456789ABCDEF" : "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0x0f]);
  }
  return out;
}

enum class DigestAlgorithm { Md5, Sha1 };

/// Hex digest of `input`, lowercase unless `upper` is set.
inline std::string hex_digest(DigestAlgorithm algo, std::string_view input, bool upper = false) {
  const EVP_MD* md = algo == DigestAlgorithm::Md5 ? EVP_md5() : EVP_sha1();
  std::array<unsigned char, EVP_MAX_MD_SIZE> buf{};
  unsigned int len = 0;
  if (EVP_Digest(input.data(), input.size(), buf.data(), &len, md, nullptr) != 1) {
    throw InternalError("digest computation failed");
  }
  return to_hex(buf.data(), len, upper);
}

inline std::string base64_encode(std::string_view bytes) {
  if (bytes.empty()) return {};
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

/// Strict standard-alphabet base64 with padding. Throws ParseError.
inline std::string base64_decode(std::string_view text) {
  if (text.empty()) return {};
  if (text.size() % 4 != 0) throw ParseError("base64 length not a multiple of 4");
  for (std::size_t i = 0; i < text.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    const bool pad_ok = c == '=' && i >= text.size() - 2 &&
                        (i == text.size() - 1 || text.back() == '=');
    if (!(std::isalnum(c) || c == '+' || c == '/' || pad_ok)) {
      throw ParseError("invalid base64 character");
    }
  }
  std::string out(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw ParseError("invalid base64");
  // EVP_DecodeBlock counts padding as zero bytes.
  std::size_t pad = 0;
  if (text.back() == '=') ++pad;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

}  // namespace leakdet
