#include "s4h/json_mapping.hpp"

#include "s4h/error.hpp"

namespace s4h {

using nlohmann::json;

namespace {

json header_json(const Header& h) {
  return json{{"seq", h.seq}, {"stamp_ns", h.stamp_ns}, {"source", h.source}};
}

json heart_json(const HeartFeatures& f) {
  return json{{"header", header_json(f.header)},
              {"device_timestamp_ns", f.device_timestamp_ns},
              {"rr_ms", f.rr_ms},
              {"peak_count", f.peak_count},
              {"sdnn_ms", f.sdnn_ms},
              {"rmssd_ms", f.rmssd_ms},
              {"pnn50_pct", f.pnn50_pct},
              {"heart_rate_bpm", f.heart_rate_bpm},
              {"window_s", f.window_s}};
}

json to_json_impl(const PhysioRaw& m) {
  json channels = json::array();
  for (const auto& ch : m.channels) {
    channels.push_back(json{{"channel_name", ch.channel_name}, {"samples", ch.samples}});
  }
  return json{{"header", header_json(m.header)},
              {"device_timestamp_ns", m.device_timestamp_ns},
              {"channels", std::move(channels)}};
}

json to_json_impl(const DeviceFeature& m) {
  return json{{"header", header_json(m.header)},
              {"device_timestamp_ns", m.device_timestamp_ns},
              {"name", m.name},
              {"value", m.value}};
}

json to_json_impl(const EcgFeatures& m) { return heart_json(m); }
json to_json_impl(const PpgFeatures& m) { return heart_json(m); }

json to_json_impl(const ExpressionEvent& m) {
  return json{{"header", header_json(m.header)},
              {"human_id", m.human_id},
              {"expression", to_string(m.expression)},
              {"confidence", m.confidence}};
}

json to_json_impl(const AffectiveState& m) {
  return json{{"header", header_json(m.header)},
              {"human_id", m.human_id},
              {"state", to_string(m.state)},
              {"heart_rate_bpm", m.heart_rate_bpm},
              {"expression", to_string(m.expression)}};
}

json to_json_impl(const BeatTruth& m) {
  return json{{"header", header_json(m.header)}, {"beat_time_ns", m.beat_time_ns}};
}

template <typename T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvariantViolation, std::string("field '") + key + "': " + e.what());
  }
}

Header header_from(const json& j) {
  const auto& h = j.at("header");
  return Header{field<std::uint64_t>(h, "seq"), field<std::int64_t>(h, "stamp_ns"),
                field<std::string>(h, "source")};
}

void heart_from(const json& j, HeartFeatures& f) {
  f.header = header_from(j);
  f.device_timestamp_ns = field<std::int64_t>(j, "device_timestamp_ns");
  f.rr_ms = field<double>(j, "rr_ms");
  f.peak_count = field<std::uint32_t>(j, "peak_count");
  f.sdnn_ms = field<double>(j, "sdnn_ms");
  f.rmssd_ms = field<double>(j, "rmssd_ms");
  f.pnn50_pct = field<double>(j, "pnn50_pct");
  f.heart_rate_bpm = field<double>(j, "heart_rate_bpm");
  f.window_s = field<double>(j, "window_s");
}

Expression expression_from(const json& j, const char* key) {
  auto e = expression_from_string(field<std::string>(j, key));
  if (!e) throw Error(ErrorCode::InvariantViolation, "unknown expression");
  return *e;
}

}  // namespace

json message_to_json(const Message& m) {
  return std::visit([](const auto& msg) { return to_json_impl(msg); }, m);
}

Message message_from_json(SchemaId schema, const json& j) {
  try {
    switch (schema) {
      case SchemaId::PhysioRaw: {
        PhysioRaw m;
        m.header = header_from(j);
        m.device_timestamp_ns = field<std::int64_t>(j, "device_timestamp_ns");
        for (const auto& ch : j.at("channels")) {
          m.channels.push_back({field<std::string>(ch, "channel_name"),
                                field<std::vector<double>>(ch, "samples")});
        }
        return m;
      }
      case SchemaId::DeviceFeature:
        return DeviceFeature{header_from(j), field<std::int64_t>(j, "device_timestamp_ns"),
                             field<std::string>(j, "name"), field<double>(j, "value")};
      case SchemaId::EcgFeatures: {
        EcgFeatures f;
        heart_from(j, f);
        return f;
      }
      case SchemaId::PpgFeatures: {
        PpgFeatures f;
        heart_from(j, f);
        return f;
      }
      case SchemaId::ExpressionEvent:
        return ExpressionEvent{header_from(j), field<std::string>(j, "human_id"),
                               expression_from(j, "expression"), field<double>(j, "confidence")};
      case SchemaId::AffectiveState: {
        auto state = affective_label_from_string(field<std::string>(j, "state"));
        if (!state) throw Error(ErrorCode::InvariantViolation, "unknown state");
        return AffectiveState{header_from(j), field<std::string>(j, "human_id"), *state,
                              field<double>(j, "heart_rate_bpm"), expression_from(j, "expression")};
      }
      case SchemaId::BeatTruth:
        return BeatTruth{header_from(j), field<std::int64_t>(j, "beat_time_ns")};
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvariantViolation, e.what());
  }
  throw Error(ErrorCode::UnknownSchema, std::to_string(static_cast<int>(schema)));
}

json delivery_to_json(const Delivery& d) {
  return json{{"op", "msg"},
              {"topic", d.topic},
              {"schema", schema_name(d.schema)},
              {"bus_time_ns", d.recv_time_ns},
              {"data", message_to_json(d.decode())}};
}

json parameter_to_json(const ParameterValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

}  // namespace s4h
