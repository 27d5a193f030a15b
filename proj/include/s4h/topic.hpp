#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace s4h {

// Canonical form: /humans/physiological/<human_id>/<sensor_type>/<sensor_id>/<field>
struct TopicName {
  std::string human_id;
  std::string sensor_type;
  std::string sensor_id;
  std::string field;

  bool operator==(const TopicName&) const = default;
};

inline constexpr std::array<std::string_view, 9> kSensorTypes = {
    "eeg", "ppg", "ecg", "eda", "emg", "eye_tracking", "eog", "pupillometry", "respiration"};
inline constexpr std::array<std::string_view, 4> kTopicFields = {"raw", "device", "features",
                                                                 "truth"};
inline constexpr std::size_t kMaxTokenLength = 64;

// [a-z0-9_]{1,64}
bool is_valid_token(std::string_view s);

// Throws TopicError{InvalidTopic} naming the failing segment.
TopicName parse_topic(std::string_view s);
// Throws Error{InvariantViolation} on a bad token.
std::string format_topic(const TopicName& t);

// Convenience for building topics from parts; validates like format_topic.
std::string physio_topic(std::string_view human_id, std::string_view sensor_type,
                         std::string_view sensor_id, std::string_view field);

// Topics outside the physiological grammar that may still be published on.
std::string expression_topic(std::string_view human_id);
std::string affective_state_topic(std::string_view human_id);
inline constexpr std::string_view kExperimentEventsTopic = "/experiment/events";

// Accepts either a physiological topic or one of the whitelisted
// namespaces; throws TopicError{InvalidTopic} otherwise.
void validate_publish_topic(std::string_view topic);

// Either an exact topic or `<prefix>/**`, matching every topic strictly
// below the prefix. `/**` matches everything.
class TopicPattern {
 public:
  // Throws TopicError{InvalidPattern}.
  explicit TopicPattern(std::string_view text);

  bool matches(std::string_view topic) const;
  const std::string& str() const { return text_; }
  bool is_prefix() const { return prefix_; }

  bool operator==(const TopicPattern& o) const { return text_ == o.text_; }

 private:
  std::string text_;
  std::string base_;  // exact topic, or prefix including trailing '/'
  bool prefix_ = false;
};

bool matches_any(const std::vector<TopicPattern>& patterns, std::string_view topic);

}  // namespace s4h
