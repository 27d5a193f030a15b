#pragma once

// Message types carried on the bus and stored in log files, plus their
// fixed little-endian envelope encoding (see docs/wire-format.md).

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "s4h/byte_io.hpp"

namespace s4h {

enum class SchemaId : std::uint16_t {
  PhysioRaw = 1,
  DeviceFeature = 2,
  EcgFeatures = 3,
  PpgFeatures = 4,
  ExpressionEvent = 5,
  AffectiveState = 6,
  BeatTruth = 7,
};

std::string_view schema_name(SchemaId id);

inline constexpr std::size_t kMaxSourceBytes = 255;
inline constexpr std::size_t kMaxChannelNameBytes = 255;
inline constexpr std::size_t kMaxChannels = 65535;

struct Header {
  std::uint64_t seq = 0;
  std::int64_t stamp_ns = 0;
  std::string source;

  bool operator==(const Header&) const = default;
};

struct PhysioRawChannel {
  std::string channel_name;
  std::vector<double> samples;

  bool operator==(const PhysioRawChannel&) const = default;
};

// One block of samples; device_timestamp_ns is the device-clock time of the
// first sample in every channel.
struct PhysioRaw {
  static constexpr SchemaId kSchema = SchemaId::PhysioRaw;
  Header header;
  std::int64_t device_timestamp_ns = 0;
  std::vector<PhysioRawChannel> channels;

  bool operator==(const PhysioRaw&) const = default;
};

struct DeviceFeature {
  static constexpr SchemaId kSchema = SchemaId::DeviceFeature;
  Header header;
  std::int64_t device_timestamp_ns = 0;
  std::string name;
  double value = 0.0;

  bool operator==(const DeviceFeature&) const = default;
};

// Shared layout of the beat-derived feature messages.
struct HeartFeatures {
  Header header;
  std::int64_t device_timestamp_ns = 0;
  double rr_ms = 0.0;
  std::uint32_t peak_count = 0;
  double sdnn_ms = 0.0;
  double rmssd_ms = 0.0;
  double pnn50_pct = 0.0;
  double heart_rate_bpm = 0.0;
  double window_s = 0.0;

  bool operator==(const HeartFeatures&) const = default;
};

struct EcgFeatures : HeartFeatures {
  static constexpr SchemaId kSchema = SchemaId::EcgFeatures;
  bool operator==(const EcgFeatures&) const = default;
};

struct PpgFeatures : HeartFeatures {
  static constexpr SchemaId kSchema = SchemaId::PpgFeatures;
  bool operator==(const PpgFeatures&) const = default;
};

enum class Expression : std::uint8_t { Neutral, Happy, Sad, Angry, Fear, Disgust, Surprise };
inline constexpr std::array kAllExpressions = {
    Expression::Neutral, Expression::Happy,   Expression::Sad,     Expression::Angry,
    Expression::Fear,    Expression::Disgust, Expression::Surprise};

enum class AffectiveLabel : std::uint8_t { CalmRelaxed, AlertActive, StressedAnxious };

std::string_view to_string(Expression e);
std::string_view to_string(AffectiveLabel s);
std::optional<Expression> expression_from_string(std::string_view s);
std::optional<AffectiveLabel> affective_label_from_string(std::string_view s);

struct ExpressionEvent {
  static constexpr SchemaId kSchema = SchemaId::ExpressionEvent;
  Header header;
  std::string human_id;
  Expression expression = Expression::Neutral;
  double confidence = 0.0;

  bool operator==(const ExpressionEvent&) const = default;
};

struct AffectiveState {
  static constexpr SchemaId kSchema = SchemaId::AffectiveState;
  Header header;
  std::string human_id;
  AffectiveLabel state = AffectiveLabel::CalmRelaxed;
  double heart_rate_bpm = 0.0;
  Expression expression = Expression::Neutral;

  bool operator==(const AffectiveState&) const = default;
};

// Simulator ground truth: bus time of one true R peak.
struct BeatTruth {
  static constexpr SchemaId kSchema = SchemaId::BeatTruth;
  Header header;
  std::int64_t beat_time_ns = 0;

  bool operator==(const BeatTruth&) const = default;
};

// Variant index + 1 == schema id.
using Message = std::variant<PhysioRaw, DeviceFeature, EcgFeatures, PpgFeatures, ExpressionEvent,
                             AffectiveState, BeatTruth>;

SchemaId schema_of(const Message& m);
Header& header_of(Message& m);
const Header& header_of(const Message& m);

// Throws Error{InvariantViolation} describing the first violated invariant.
void validate(const Message& m);

Bytes encode_envelope(const Message& m);
void encode_envelope(const Message& m, Bytes& out);

// Errors: UnknownSchema, Truncated, TrailingBytes, MalformedUtf8,
// InvariantViolation (decoded value breaks a type invariant).
Message decode_envelope(std::span<const std::uint8_t> bytes);

// Reads only the schema id; throws UnknownSchema / Truncated.
SchemaId peek_schema(std::span<const std::uint8_t> bytes);

}  // namespace s4h
