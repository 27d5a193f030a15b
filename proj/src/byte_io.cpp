#include "s4h/byte_io.hpp"

#include <limits>

namespace s4h {

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  const auto n = s.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

void ByteWriter::put_string(std::string_view s) {
  if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::InvariantViolation, "string longer than 65535 bytes");
  }
  put(static_cast<std::uint16_t>(s.size()));
  out_.insert(out_.end(), s.begin(), s.end());
}

void ByteWriter::put_blob(std::span<const std::uint8_t> b) {
  if (b.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::InvariantViolation, "blob longer than 2^32-1 bytes");
  }
  put(static_cast<std::uint32_t>(b.size()));
  put_raw(b);
}

void ByteReader::need(std::size_t n) const {
  if (in_.size() - pos_ < n) {
    throw Error(ErrorCode::Truncated, "input ends at byte " + std::to_string(in_.size()) +
                                          " while reading " + std::to_string(n) + " bytes at " +
                                          std::to_string(pos_));
  }
}

std::string ByteReader::get_string() {
  const auto len = get<std::uint16_t>();
  auto raw = get_raw(len);
  std::string s(reinterpret_cast<const char*>(raw.data()), raw.size());
  if (!is_valid_utf8(s)) {
    throw Error(ErrorCode::MalformedUtf8, "string at byte " + std::to_string(pos_ - len));
  }
  return s;
}

std::span<const std::uint8_t> ByteReader::get_blob() {
  const auto len = get<std::uint32_t>();
  return get_raw(len);
}

std::span<const std::uint8_t> ByteReader::get_raw(std::size_t n) {
  need(n);
  auto out = in_.subspan(pos_, n);
  pos_ += n;
  return out;
}

}  // namespace s4h
