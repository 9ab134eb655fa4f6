#ifndef CLINLP_UTF8_HPP
#define CLINLP_UTF8_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace clinlp::utf8 {

// Byte offset of each Unicode scalar value, plus one past-the-end entry.
// Invalid bytes are treated as single scalars (latin-1 style recovery).
inline std::vector<size_t> scalar_byte_offsets(std::string_view s) {
  std::vector<size_t> offs;
  size_t i = 0;
  while (i < s.size()) {
    offs.push_back(i);
    unsigned char c = static_cast<unsigned char>(s[i]);
    size_t len = 1;
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    if (i + len > s.size()) len = 1;
    i += len;
  }
  offs.push_back(s.size());
  return offs;
}

inline size_t scalar_length(std::string_view s) {
  return scalar_byte_offsets(s).size() - 1;
}

// Slice by scalar indices, end inclusive.
inline std::string slice(std::string_view s, const std::vector<size_t>& offs,
                         size_t begin, size_t end) {
  if (begin >= offs.size() - 1 || end + 1 >= offs.size() || begin > end) return "";
  return std::string(s.substr(offs[begin], offs[end + 1] - offs[begin]));
}

inline std::string slice(std::string_view s, size_t begin, size_t end) {
  return slice(s, scalar_byte_offsets(s), begin, end);
}

inline uint32_t decode_at(std::string_view s, size_t byte_off) {
  unsigned char c = static_cast<unsigned char>(s[byte_off]);
  if (c < 0x80) return c;
  size_t len = c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 1;
  if (len == 1 || byte_off + len > s.size()) return c;
  uint32_t cp = c & (0xFF >> (len + 1));
  for (size_t k = 1; k < len; ++k)
    cp = (cp << 6) | (static_cast<unsigned char>(s[byte_off + k]) & 0x3F);
  return cp;
}

// Scalar values of a string, for character-level models.
inline std::vector<uint32_t> scalars(std::string_view s) {
  std::vector<uint32_t> out;
  auto offs = scalar_byte_offsets(s);
  for (size_t k = 0; k + 1 < offs.size(); ++k) out.push_back(decode_at(s, offs[k]));
  return out;
}

}  // namespace clinlp::utf8

#endif  // CLINLP_UTF8_HPP
