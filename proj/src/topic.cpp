#include "s4h/topic.hpp"

#include <algorithm>

#include "s4h/error.hpp"

namespace s4h {

namespace {

constexpr std::string_view kPhysioPrefix = "/humans/physiological/";

std::vector<std::string_view> split_segments(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 1;  // skip leading '/'
  while (true) {
    const auto pos = s.find('/', start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view v) {
  return std::find(set.begin(), set.end(), v) != set.end();
}

[[noreturn]] void invalid_topic(std::string_view s, const char* segment, const char* why) {
  throw TopicError(ErrorCode::InvalidTopic, segment,
                   "'" + std::string(s) + "': " + why);
}

void check_tokens(const TopicName& t) {
  auto check = [](std::string_view v, const char* what) {
    if (!is_valid_token(v)) {
      throw Error(ErrorCode::InvariantViolation,
                  std::string(what) + " '" + std::string(v) + "' is not a valid token");
    }
  };
  check(t.human_id, "human_id");
  check(t.sensor_type, "sensor_type");
  check(t.sensor_id, "sensor_id");
  check(t.field, "field");
  if (!contains(kSensorTypes, t.sensor_type)) {
    throw Error(ErrorCode::InvariantViolation, "unknown sensor_type '" + t.sensor_type + "'");
  }
  if (!contains(kTopicFields, t.field)) {
    throw Error(ErrorCode::InvariantViolation, "unknown field '" + t.field + "'");
  }
}

}  // namespace

bool is_valid_token(std::string_view s) {
  if (s.empty() || s.size() > kMaxTokenLength) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

TopicName parse_topic(std::string_view s) {
  if (s.empty() || s.front() != '/') invalid_topic(s, "prefix", "missing leading '/'");
  const auto seg = split_segments(s);
  if (seg.size() != 6) invalid_topic(s, "segment_count", "expected 6 segments");
  if (seg[0] != "humans" || seg[1] != "physiological") {
    invalid_topic(s, "prefix", "must start with /humans/physiological/");
  }
  if (!is_valid_token(seg[2])) invalid_topic(s, "human_id", "bad token");
  if (!is_valid_token(seg[3]) || !contains(kSensorTypes, seg[3])) {
    invalid_topic(s, "sensor_type", "unknown sensor type");
  }
  if (!is_valid_token(seg[4])) invalid_topic(s, "sensor_id", "bad token");
  if (!contains(kTopicFields, seg[5])) invalid_topic(s, "field", "unknown field");
  return TopicName{std::string(seg[2]), std::string(seg[3]), std::string(seg[4]),
                   std::string(seg[5])};
}

std::string format_topic(const TopicName& t) {
  check_tokens(t);
  std::string out(kPhysioPrefix);
  out += t.human_id;
  out += '/';
  out += t.sensor_type;
  out += '/';
  out += t.sensor_id;
  out += '/';
  out += t.field;
  return out;
}

std::string physio_topic(std::string_view human_id, std::string_view sensor_type,
                         std::string_view sensor_id, std::string_view field) {
  return format_topic(TopicName{std::string(human_id), std::string(sensor_type),
                                std::string(sensor_id), std::string(field)});
}

std::string expression_topic(std::string_view human_id) {
  if (!is_valid_token(human_id)) {
    throw Error(ErrorCode::InvariantViolation, "bad human_id '" + std::string(human_id) + "'");
  }
  return "/humans/expressions/" + std::string(human_id);
}

std::string affective_state_topic(std::string_view human_id) {
  if (!is_valid_token(human_id)) {
    throw Error(ErrorCode::InvariantViolation, "bad human_id '" + std::string(human_id) + "'");
  }
  return "/humans/affective_state/" + std::string(human_id);
}

void validate_publish_topic(std::string_view topic) {
  if (topic == kExperimentEventsTopic) return;
  if (topic.starts_with("/humans/expressions/") || topic.starts_with("/humans/affective_state/")) {
    const auto seg = split_segments(topic);
    if (seg.size() == 3 && is_valid_token(seg[2])) return;
    invalid_topic(topic, "human_id", "bad token");
  }
  parse_topic(topic);
}

TopicPattern::TopicPattern(std::string_view text) : text_(text) {
  auto fail = [&](const char* segment, const char* why) {
    throw TopicError(ErrorCode::InvalidPattern, segment, "'" + text_ + "': " + why);
  };
  if (text.empty() || text.front() != '/') fail("prefix", "missing leading '/'");
  std::string_view body = text;
  if (text.ends_with("/**")) {
    prefix_ = true;
    body = text.substr(0, text.size() - 3);
  }
  if (!body.empty()) {
    if (body.front() != '/') fail("prefix", "missing leading '/'");
    std::size_t i = 0;
    for (auto seg : split_segments(body)) {
      if (!is_valid_token(seg)) {
        throw TopicError(ErrorCode::InvalidPattern, "segment " + std::to_string(i),
                         "'" + text_ + "': bad token");
      }
      ++i;
    }
  } else if (!prefix_) {
    fail("prefix", "empty pattern");
  }
  base_ = std::string(body);
  if (prefix_) base_ += '/';
}

bool TopicPattern::matches(std::string_view topic) const {
  if (!prefix_) return topic == base_;
  return topic.size() > base_.size() && topic.starts_with(base_);
}

bool matches_any(const std::vector<TopicPattern>& patterns, std::string_view topic) {
  return std::any_of(patterns.begin(), patterns.end(),
                     [&](const TopicPattern& p) { return p.matches(topic); });
}

}  // namespace s4h
