#include <doctest.h>

#include "s4h/error.hpp"
#include "s4h/messages.hpp"
#include "support/gen.hpp"
#include "support/golden.hpp"
#include "support/oracle_encode.hpp"

using namespace s4h;
using namespace s4h::test;

namespace {

ErrorCode decode_error(std::span<const std::uint8_t> b) {
  try {
    decode_envelope(b);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode succeeded");
  return ErrorCode::IoError;
}

ErrorCode encode_error(const Message& m) {
  try {
    encode_envelope(m);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("encode succeeded");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("empty PhysioRaw encodes to 30 bytes") {
  const auto b = encode_envelope(PhysioRaw{});
  CHECK(b.size() == 30);
  CHECK(b[0] == 1);
  CHECK(b[1] == 0);
  for (std::size_t i = 2; i < b.size(); ++i) CHECK(b[i] == 0);
}

TEST_CASE("envelope bytes match the layout oracle") {
  Gen g(20240601);
  for (auto s : kAllSchemas) {
    for (int i = 0; i < 200; ++i) {
      const auto m = g.message(s);
      const auto b = encode_envelope(m);
      REQUIRE(b == oracle_encode(m));
      CHECK(peek_schema(b) == s);
    }
  }
}

TEST_CASE("decode inverts encode and re-encoding is a fixed point") {
  Gen g(7);
  for (auto s : kAllSchemas) {
    for (int i = 0; i < 200; ++i) {
      const auto m = g.message(s);
      const auto b = encode_envelope(m);
      const auto d = decode_envelope(b);
      REQUIRE(d == m);
      REQUIRE(encode_envelope(d) == b);
    }
  }
}

TEST_CASE("golden encodings match the hex dumps in the docs") {
  const std::string doc = std::string(S4H_SOURCE_DIR) + "/docs/wire-format.md";
  for (auto s : kAllSchemas) {
    CAPTURE(schema_name(s));
    const auto golden = read_golden(doc, std::string(schema_name(s)));
    REQUIRE(golden.has_value());
    CHECK(*golden == encode_envelope(golden_message(s)));
  }
}

TEST_CASE("invariant violations are rejected at encode time") {
  PhysioRaw nan_raw{{}, 0, {{"ecg_mv", {1.0, std::nan("")}}}};
  CHECK(encode_error(nan_raw) == ErrorCode::InvariantViolation);
  PhysioRaw inf_raw{{}, 0, {{"ecg_mv", {HUGE_VAL}}}};
  CHECK(encode_error(inf_raw) == ErrorCode::InvariantViolation);
  PhysioRaw dup{{}, 0, {{"a", {1.0}}, {"a", {2.0}}}};
  CHECK(encode_error(dup) == ErrorCode::InvariantViolation);
  PhysioRaw uneven{{}, 0, {{"a", {1.0}}, {"b", {}}}};
  CHECK(encode_error(uneven) == ErrorCode::InvariantViolation);
  PhysioRaw unnamed{{}, 0, {{"", {}}}};
  CHECK(encode_error(unnamed) == ErrorCode::InvariantViolation);
  PhysioRaw long_source;
  long_source.header.source = std::string(256, 'x');
  CHECK(encode_error(long_source) == ErrorCode::InvariantViolation);
  long_source.header.source = std::string(255, 'x');
  CHECK_NOTHROW(encode_envelope(long_source));
  PhysioRaw negative_stamp;
  negative_stamp.header.stamp_ns = -1;
  CHECK(encode_error(negative_stamp) == ErrorCode::InvariantViolation);
  CHECK(encode_error(DeviceFeature{{}, 0, "", 1.0}) == ErrorCode::InvariantViolation);
  CHECK(encode_error(DeviceFeature{{}, 0, "x", std::nan("")}) == ErrorCode::InvariantViolation);
  EcgFeatures f;
  f.pnn50_pct = 100.5;
  CHECK(encode_error(f) == ErrorCode::InvariantViolation);
  CHECK(encode_error(ExpressionEvent{{}, "p1", Expression::Happy, 1.5}) ==
        ErrorCode::InvariantViolation);
  CHECK(encode_error(ExpressionEvent{{}, "p1", static_cast<Expression>(9), 0.5}) ==
        ErrorCode::InvariantViolation);
  PhysioRaw bad_utf8;
  bad_utf8.header.source = "\xC3";
  CHECK(encode_error(bad_utf8) == ErrorCode::InvariantViolation);
}

TEST_CASE("decode errors") {
  const std::uint8_t ff[] = {0xFF, 0xFF};
  CHECK(decode_error(ff) == ErrorCode::UnknownSchema);
  const std::uint8_t zero[] = {0x00, 0x00};
  CHECK(decode_error(zero) == ErrorCode::UnknownSchema);
  const std::uint8_t eight[] = {0x08, 0x00};
  CHECK(decode_error(eight) == ErrorCode::UnknownSchema);
  CHECK(decode_error({}) == ErrorCode::Truncated);

  Gen g(99);
  for (auto s : kAllSchemas) {
    auto b = encode_envelope(g.message(s));
    for (std::size_t cut = 0; cut < b.size(); ++cut) {
      CAPTURE(cut);
      CHECK(decode_error(std::span(b).first(cut)) == ErrorCode::Truncated);
    }
    b.push_back(0x00);
    CHECK(decode_error(b) == ErrorCode::TrailingBytes);
  }
}

TEST_CASE("malformed UTF-8 and out-of-range enums are rejected on decode") {
  auto b = encode_envelope(DeviceFeature{{0, 0, "ab"}, 0, "x", 1.0});
  // source bytes start after schema(2) seq(8) stamp(8) len(2)
  b[20] = 0xC0;
  CHECK(decode_error(b) == ErrorCode::MalformedUtf8);

  auto e = encode_envelope(ExpressionEvent{{0, 0, ""}, "p", Expression::Sad, 0.5});
  // expression byte: 2 + 8 + 8 + 2 + (2 + 1)
  CHECK(e[23] == static_cast<std::uint8_t>(Expression::Sad));
  e[23] = 7;
  CHECK(decode_error(e) == ErrorCode::InvariantViolation);

  PhysioRaw raw{{}, 0, {{"c", {1.0}}}};
  auto r = encode_envelope(raw);
  // replace the sample with a NaN bit pattern
  const std::uint64_t nan_bits = 0x7FF8000000000000ULL;
  std::memcpy(r.data() + r.size() - 8, &nan_bits, 8);
  CHECK(decode_error(r) == ErrorCode::InvariantViolation);
}

TEST_CASE("encoding is injective on single-field changes") {
  Gen g(3);
  for (int i = 0; i < 300; ++i) {
    auto m = g.physio_raw();
    auto n = m;
    switch (i % 4) {
      case 0: n.header.seq ^= 1; break;
      case 1: n.device_timestamp_ns ^= 1; break;
      case 2: n.header.source += "x"; break;
      default:
        n.channels.push_back({"extra", std::vector<double>(m.channels.empty() ? 0 : m.channels[0].samples.size(), 1.0)});
    }
    CHECK(encode_envelope(m) != encode_envelope(n));
  }
}

TEST_CASE("enum names round-trip") {
  for (auto e : kAllExpressions) CHECK(expression_from_string(to_string(e)) == e);
  CHECK(!expression_from_string("joy"));
  for (auto l : {AffectiveLabel::CalmRelaxed, AffectiveLabel::AlertActive,
                 AffectiveLabel::StressedAnxious}) {
    CHECK(affective_label_from_string(to_string(l)) == l);
  }
  CHECK(to_string(AffectiveLabel::StressedAnxious) == "stressed_anxious");
}
