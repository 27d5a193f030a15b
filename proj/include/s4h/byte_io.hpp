#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "s4h/error.hpp"

namespace s4h {

using Bytes = std::vector<std::uint8_t>;

static_assert(std::endian::native == std::endian::little,
              "wire format assumes a little-endian host");

bool is_valid_utf8(std::string_view s);

// Little-endian append-only writer.
class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out_.insert(out_.end(), p, p + sizeof(T));
  }

  void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }

  // u16 length prefix + raw bytes.
  void put_string(std::string_view s);
  // u32 length prefix + raw bytes.
  void put_blob(std::span<const std::uint8_t> b);
  void put_raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

 private:
  Bytes& out_;
};

// Bounds-checked little-endian reader. Every read past the end throws
// Error{Truncated}.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string get_string();  // validates UTF-8
  std::span<const std::uint8_t> get_blob();
  std::span<const std::uint8_t> get_raw(std::size_t n);

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }
  bool at_end() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace s4h
