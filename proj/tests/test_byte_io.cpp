#include <doctest.h>

#include "s4h/byte_io.hpp"
#include "s4h/error.hpp"

using namespace s4h;

TEST_CASE("little-endian integers and floats") {
  Bytes buf;
  ByteWriter w(buf);
  w.put<std::uint16_t>(0x0102);
  w.put<std::uint32_t>(0x03040506);
  w.put<std::int64_t>(-2);
  w.put_f64(1.0);
  const Bytes& b = buf;
  const Bytes expected = {0x02, 0x01, 0x06, 0x05, 0x04, 0x03, 0xFE, 0xFF, 0xFF, 0xFF, 0xFF,
                          0xFF, 0xFF, 0xFF, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xF0, 0x3F};
  CHECK(b == expected);

  ByteReader r(b);
  CHECK(r.get<std::uint16_t>() == 0x0102);
  CHECK(r.get<std::uint32_t>() == 0x03040506u);
  CHECK(r.get<std::int64_t>() == -2);
  CHECK(r.get_f64() == 1.0);
  CHECK(r.at_end());
  CHECK_THROWS_AS(r.get<std::uint8_t>(), Error);
}

TEST_CASE("strings and blobs") {
  Bytes buf;
  ByteWriter w(buf);
  w.put_string("h\xC3\xA9");
  w.put_blob(Bytes{1, 2, 3});
  const Bytes expected = {3, 0, 'h', 0xC3, 0xA9, 3, 0, 0, 0, 1, 2, 3};
  CHECK(buf == expected);
  ByteReader r(buf);
  CHECK(r.get_string() == "h\xC3\xA9");
  const auto blob = r.get_blob();
  CHECK(Bytes(blob.begin(), blob.end()) == Bytes{1, 2, 3});
  CHECK(r.remaining() == 0);
}

TEST_CASE("utf-8 validation") {
  CHECK(is_valid_utf8(""));
  CHECK(is_valid_utf8("abc"));
  CHECK(is_valid_utf8("\xE2\x82\xAC"));
  CHECK(is_valid_utf8("\xF0\x9F\x98\x80"));
  CHECK_FALSE(is_valid_utf8("\xC3"));
  CHECK_FALSE(is_valid_utf8("\xC0\x80"));          // overlong
  CHECK_FALSE(is_valid_utf8("\xED\xA0\x80"));      // surrogate
  CHECK_FALSE(is_valid_utf8("\xF4\x90\x80\x80"));  // above U+10FFFF
  CHECK_FALSE(is_valid_utf8("\x80"));
}

TEST_CASE("reader errors") {
  const Bytes bad = {2, 0, 0xC3, 0x28};
  ByteReader r(bad);
  try {
    r.get_string();
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedUtf8);
  }
  const Bytes short_str = {5, 0, 'a'};
  ByteReader r2(short_str);
  try {
    r2.get_string();
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Truncated);
  }
}
