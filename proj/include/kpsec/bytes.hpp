#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace kpsec {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Malformed serialized input (files, wire encodings).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void append(Bytes& out, ByteView data) { out.insert(out.end(), data.begin(), data.end()); }

inline void append(Bytes& out, std::string_view text) {
  out.insert(out.end(), text.begin(), text.end());
}

inline void put_be(Bytes& out, std::uint64_t value, std::size_t width) {
  for (std::size_t i = width; i-- > 0;) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

inline std::uint64_t get_be(ByteView in, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i) v = (v << 8) | in[i];
  return v;
}

// True if `needle` occurs as a contiguous run inside `haystack`.
bool contains(ByteView haystack, ByteView needle);

}  // namespace kpsec
