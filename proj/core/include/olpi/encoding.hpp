#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>

namespace olpi {

// Byte encodings used for state/control hashing and equality. Doubles are
// normalized with +0.0 so that -0.0 and +0.0 encode identically; everything
// else is the raw little-endian representation.

inline void append_raw(std::string& out, const void* p, std::size_t n) {
  out.append(static_cast<const char*>(p), n);
}

inline std::string encode_doubles(std::span<const double> values) {
  std::string out;
  out.reserve(values.size() * sizeof(double));
  for (double v : values) {
    const double canon = v + 0.0;
    append_raw(out, &canon, sizeof(canon));
  }
  return out;
}

inline std::string encode_ints(std::span<const int> values) {
  std::string out;
  out.reserve(values.size() * sizeof(std::int32_t));
  for (int v : values) {
    const auto w = static_cast<std::int32_t>(v);
    append_raw(out, &w, sizeof(w));
  }
  return out;
}

inline std::string encode_int(int v) {
  return encode_ints(std::span<const int>(&v, 1));
}

inline std::string to_hex(const std::string& bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0xF]);
  }
  return out;
}

}  // namespace olpi
