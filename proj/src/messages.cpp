#include "s4h/messages.hpp"

#include <cmath>
#include <set>

namespace s4h {

namespace {

constexpr std::array<std::string_view, 7> kExpressionNames = {
    "neutral", "happy", "sad", "angry", "fear", "disgust", "surprise"};
constexpr std::array<std::string_view, 3> kLabelNames = {"calm_relaxed", "alert_active",
                                                         "stressed_anxious"};

[[noreturn]] void violation(const std::string& what) {
  throw Error(ErrorCode::InvariantViolation, what);
}

void check_finite(double v, const char* field) {
  if (!std::isfinite(v)) violation(std::string(field) + " is not finite");
}

void check_string(std::string_view s, std::size_t max_bytes, const char* field) {
  if (s.size() > max_bytes) {
    violation(std::string(field) + " exceeds " + std::to_string(max_bytes) + " bytes");
  }
  if (!is_valid_utf8(s)) violation(std::string(field) + " is not valid UTF-8");
}

void validate_header(const Header& h) {
  if (h.stamp_ns < 0) violation("header.stamp_ns is negative");
  check_string(h.source, kMaxSourceBytes, "header.source");
}

void validate_body(const PhysioRaw& m) {
  validate_header(m.header);
  if (m.channels.size() > kMaxChannels) violation("more than 65535 channels");
  std::set<std::string_view> names;
  for (const auto& ch : m.channels) {
    if (ch.channel_name.empty()) violation("empty channel_name");
    check_string(ch.channel_name, kMaxChannelNameBytes, "channel_name");
    if (!names.insert(ch.channel_name).second) {
      violation("duplicate channel_name '" + ch.channel_name + "'");
    }
    if (ch.samples.size() > std::numeric_limits<std::uint32_t>::max()) {
      violation("channel has more than 2^32-1 samples");
    }
    if (ch.samples.size() != m.channels.front().samples.size()) {
      violation("channels carry differing sample counts");
    }
    for (double v : ch.samples) {
      if (!std::isfinite(v)) violation("non-finite sample in channel '" + ch.channel_name + "'");
    }
  }
}

void validate_body(const DeviceFeature& m) {
  validate_header(m.header);
  if (m.name.empty()) violation("device feature name is empty");
  check_string(m.name, 65535, "name");
  check_finite(m.value, "value");
}

void validate_body(const HeartFeatures& m) {
  validate_header(m.header);
  check_finite(m.rr_ms, "rr_ms");
  check_finite(m.sdnn_ms, "sdnn_ms");
  check_finite(m.rmssd_ms, "rmssd_ms");
  check_finite(m.pnn50_pct, "pnn50_pct");
  check_finite(m.heart_rate_bpm, "heart_rate_bpm");
  check_finite(m.window_s, "window_s");
  if (m.pnn50_pct < 0.0 || m.pnn50_pct > 100.0) violation("pnn50_pct outside [0,100]");
}

void check_expression(Expression e) {
  if (static_cast<std::uint8_t>(e) >= kExpressionNames.size()) violation("unknown expression");
}

void validate_body(const ExpressionEvent& m) {
  validate_header(m.header);
  check_string(m.human_id, 65535, "human_id");
  check_expression(m.expression);
  check_finite(m.confidence, "confidence");
  if (m.confidence < 0.0 || m.confidence > 1.0) violation("confidence outside [0,1]");
}

void validate_body(const AffectiveState& m) {
  validate_header(m.header);
  check_string(m.human_id, 65535, "human_id");
  if (static_cast<std::uint8_t>(m.state) >= kLabelNames.size()) violation("unknown state");
  check_expression(m.expression);
  check_finite(m.heart_rate_bpm, "heart_rate_bpm");
}

void validate_body(const BeatTruth& m) { validate_header(m.header); }

// ---- encoding ----

void put_header(ByteWriter& w, const Header& h) {
  w.put(h.seq);
  w.put(h.stamp_ns);
  w.put_string(h.source);
}

void put_body(ByteWriter& w, const PhysioRaw& m) {
  put_header(w, m.header);
  w.put(m.device_timestamp_ns);
  w.put(static_cast<std::uint16_t>(m.channels.size()));
  for (const auto& ch : m.channels) {
    w.put_string(ch.channel_name);
    w.put(static_cast<std::uint32_t>(ch.samples.size()));
    for (double v : ch.samples) w.put_f64(v);
  }
}

void put_body(ByteWriter& w, const DeviceFeature& m) {
  put_header(w, m.header);
  w.put(m.device_timestamp_ns);
  w.put_string(m.name);
  w.put_f64(m.value);
}

void put_body(ByteWriter& w, const HeartFeatures& m) {
  put_header(w, m.header);
  w.put(m.device_timestamp_ns);
  w.put_f64(m.rr_ms);
  w.put(m.peak_count);
  w.put_f64(m.sdnn_ms);
  w.put_f64(m.rmssd_ms);
  w.put_f64(m.pnn50_pct);
  w.put_f64(m.heart_rate_bpm);
  w.put_f64(m.window_s);
}

void put_body(ByteWriter& w, const ExpressionEvent& m) {
  put_header(w, m.header);
  w.put_string(m.human_id);
  w.put(static_cast<std::uint8_t>(m.expression));
  w.put_f64(m.confidence);
}

void put_body(ByteWriter& w, const AffectiveState& m) {
  put_header(w, m.header);
  w.put_string(m.human_id);
  w.put(static_cast<std::uint8_t>(m.state));
  w.put_f64(m.heart_rate_bpm);
  w.put(static_cast<std::uint8_t>(m.expression));
}

void put_body(ByteWriter& w, const BeatTruth& m) {
  put_header(w, m.header);
  w.put(m.beat_time_ns);
}

// ---- decoding ----

Header get_header(ByteReader& r) {
  Header h;
  h.seq = r.get<std::uint64_t>();
  h.stamp_ns = r.get<std::int64_t>();
  h.source = r.get_string();
  return h;
}

PhysioRaw get_physio_raw(ByteReader& r) {
  PhysioRaw m;
  m.header = get_header(r);
  m.device_timestamp_ns = r.get<std::int64_t>();
  const auto n = r.get<std::uint16_t>();
  m.channels.reserve(n);
  for (std::uint16_t i = 0; i < n; ++i) {
    PhysioRawChannel ch;
    ch.channel_name = r.get_string();
    const auto count = r.get<std::uint32_t>();
    // Bound the allocation by what is actually left in the buffer.
    if (r.remaining() / 8 < count) {
      throw Error(ErrorCode::Truncated, "sample array extends past end of input");
    }
    ch.samples.resize(count);
    for (auto& v : ch.samples) v = r.get_f64();
    m.channels.push_back(std::move(ch));
  }
  return m;
}

DeviceFeature get_device_feature(ByteReader& r) {
  DeviceFeature m;
  m.header = get_header(r);
  m.device_timestamp_ns = r.get<std::int64_t>();
  m.name = r.get_string();
  m.value = r.get_f64();
  return m;
}

template <typename T>
T get_heart_features(ByteReader& r) {
  T m;
  m.header = get_header(r);
  m.device_timestamp_ns = r.get<std::int64_t>();
  m.rr_ms = r.get_f64();
  m.peak_count = r.get<std::uint32_t>();
  m.sdnn_ms = r.get_f64();
  m.rmssd_ms = r.get_f64();
  m.pnn50_pct = r.get_f64();
  m.heart_rate_bpm = r.get_f64();
  m.window_s = r.get_f64();
  return m;
}

ExpressionEvent get_expression_event(ByteReader& r) {
  ExpressionEvent m;
  m.header = get_header(r);
  m.human_id = r.get_string();
  m.expression = static_cast<Expression>(r.get<std::uint8_t>());
  m.confidence = r.get_f64();
  return m;
}

AffectiveState get_affective_state(ByteReader& r) {
  AffectiveState m;
  m.header = get_header(r);
  m.human_id = r.get_string();
  m.state = static_cast<AffectiveLabel>(r.get<std::uint8_t>());
  m.heart_rate_bpm = r.get_f64();
  m.expression = static_cast<Expression>(r.get<std::uint8_t>());
  return m;
}

BeatTruth get_beat_truth(ByteReader& r) {
  BeatTruth m;
  m.header = get_header(r);
  m.beat_time_ns = r.get<std::int64_t>();
  return m;
}

bool known_schema(std::uint16_t id) { return id >= 1 && id <= 7; }

}  // namespace

std::string_view schema_name(SchemaId id) {
  switch (id) {
    case SchemaId::PhysioRaw: return "PhysioRaw";
    case SchemaId::DeviceFeature: return "DeviceFeature";
    case SchemaId::EcgFeatures: return "EcgFeatures";
    case SchemaId::PpgFeatures: return "PpgFeatures";
    case SchemaId::ExpressionEvent: return "ExpressionEvent";
    case SchemaId::AffectiveState: return "AffectiveState";
    case SchemaId::BeatTruth: return "BeatTruth";
  }
  return "Unknown";
}

std::string_view to_string(Expression e) {
  const auto i = static_cast<std::size_t>(e);
  return i < kExpressionNames.size() ? kExpressionNames[i] : "invalid";
}

std::string_view to_string(AffectiveLabel s) {
  const auto i = static_cast<std::size_t>(s);
  return i < kLabelNames.size() ? kLabelNames[i] : "invalid";
}

std::optional<Expression> expression_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kExpressionNames.size(); ++i) {
    if (kExpressionNames[i] == s) return static_cast<Expression>(i);
  }
  return std::nullopt;
}

std::optional<AffectiveLabel> affective_label_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
    if (kLabelNames[i] == s) return static_cast<AffectiveLabel>(i);
  }
  return std::nullopt;
}

SchemaId schema_of(const Message& m) { return static_cast<SchemaId>(m.index() + 1); }

Header& header_of(Message& m) {
  return std::visit([](auto& msg) -> Header& { return msg.header; }, m);
}

const Header& header_of(const Message& m) {
  return std::visit([](const auto& msg) -> const Header& { return msg.header; }, m);
}

void validate(const Message& m) {
  std::visit([](const auto& msg) { validate_body(msg); }, m);
}

void encode_envelope(const Message& m, Bytes& out) {
  validate(m);
  ByteWriter w(out);
  w.put(static_cast<std::uint16_t>(schema_of(m)));
  std::visit([&w](const auto& msg) { put_body(w, msg); }, m);
}

Bytes encode_envelope(const Message& m) {
  Bytes out;
  encode_envelope(m, out);
  return out;
}

SchemaId peek_schema(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto id = r.get<std::uint16_t>();
  if (!known_schema(id)) {
    throw Error(ErrorCode::UnknownSchema, "schema id " + std::to_string(id));
  }
  return static_cast<SchemaId>(id);
}

Message decode_envelope(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto id = r.get<std::uint16_t>();
  if (!known_schema(id)) {
    throw Error(ErrorCode::UnknownSchema, "schema id " + std::to_string(id));
  }
  Message m;
  switch (static_cast<SchemaId>(id)) {
    case SchemaId::PhysioRaw: m = get_physio_raw(r); break;
    case SchemaId::DeviceFeature: m = get_device_feature(r); break;
    case SchemaId::EcgFeatures: m = get_heart_features<EcgFeatures>(r); break;
    case SchemaId::PpgFeatures: m = get_heart_features<PpgFeatures>(r); break;
    case SchemaId::ExpressionEvent: m = get_expression_event(r); break;
    case SchemaId::AffectiveState: m = get_affective_state(r); break;
    case SchemaId::BeatTruth: m = get_beat_truth(r); break;
  }
  if (!r.at_end()) {
    throw Error(ErrorCode::TrailingBytes,
                std::to_string(r.remaining()) + " bytes after end of message");
  }
  validate(m);
  return m;
}

}  // namespace s4h
