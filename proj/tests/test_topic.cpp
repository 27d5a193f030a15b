#include <doctest.h>

#include "s4h/error.hpp"
#include "s4h/modality.hpp"
#include "s4h/topic.hpp"
#include "support/gen.hpp"

using namespace s4h;

namespace {

std::string failing_segment(std::string_view s) {
  try {
    parse_topic(s);
  } catch (const TopicError& e) {
    CHECK(e.code() == ErrorCode::InvalidTopic);
    return e.segment();
  }
  return "<accepted>";
}

}  // namespace

TEST_CASE("parse examples") {
  CHECK(parse_topic("/humans/physiological/p1/eeg/headset_1/features") ==
        TopicName{"p1", "eeg", "headset_1", "features"});
  CHECK(parse_topic("/humans/physiological/p1/ecg/h10/raw") == TopicName{"p1", "ecg", "h10", "raw"});
  CHECK(failing_segment("/foo/bar") != "<accepted>");
}

TEST_CASE("format examples") {
  CHECK(format_topic({"p1", "ecg", "h10", "features"}) == "/humans/physiological/p1/ecg/h10/features");
  CHECK_THROWS_AS(format_topic({"p1", "ECG", "h10", "raw"}), Error);
  try {
    format_topic({"p1", "ECG", "h10", "raw"});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvariantViolation);
  }
  CHECK_THROWS(format_topic({"p1", "ecg", "h10", "summary"}));
  CHECK_THROWS(format_topic({"", "ecg", "h10", "raw"}));
}

TEST_CASE("failing segments are identified") {
  CHECK(failing_segment("humans/physiological/p1/ecg/h10/raw") == "prefix");
  CHECK(failing_segment("/people/physiological/p1/ecg/h10/raw") == "prefix");
  CHECK(failing_segment("/humans/physio/p1/ecg/h10/raw") == "prefix");
  CHECK(failing_segment("/humans/physiological/p1/ecg/h10") == "segment_count");
  CHECK(failing_segment("/humans/physiological/p1/ecg/h10/raw/extra") == "segment_count");
  CHECK(failing_segment("/humans/physiological/P1/ecg/h10/raw") == "human_id");
  CHECK(failing_segment("/humans/physiological//ecg/h10/raw") == "human_id");
  CHECK(failing_segment("/humans/physiological/p1/fnirs/h10/raw") == "sensor_type");
  CHECK(failing_segment("/humans/physiological/p1/ecg/h-10/raw") == "sensor_id");
  CHECK(failing_segment("/humans/physiological/p1/ecg/" + std::string(65, 'a') + "/raw") == "sensor_id");
  CHECK(failing_segment("/humans/physiological/p1/ecg/" + std::string(64, 'a') + "/raw") == "<accepted>");
  CHECK(failing_segment("/humans/physiological/p1/ecg/h10/summary") == "field");
  CHECK(failing_segment("/humans/physiological/p1/ecg/h10/raw/") == "segment_count");
}

TEST_CASE("parse and format round-trip on generated names") {
  test::Gen g(11);
  for (int i = 0; i < 1000; ++i) {
    const auto t = g.topic_name();
    const auto s = format_topic(t);
    REQUIRE(parse_topic(s) == t);
    REQUIRE(format_topic(parse_topic(s)) == s);
  }
}

TEST_CASE("token rule") {
  CHECK(is_valid_token("a"));
  CHECK(is_valid_token("abc_123"));
  CHECK_FALSE(is_valid_token(""));
  CHECK_FALSE(is_valid_token("A"));
  CHECK_FALSE(is_valid_token("a.b"));
  CHECK_FALSE(is_valid_token("\xC3\xA9"));
  CHECK(is_valid_token(std::string(64, 'z')));
  CHECK_FALSE(is_valid_token(std::string(65, 'z')));
}

TEST_CASE("publishable topics") {
  CHECK_NOTHROW(validate_publish_topic("/humans/physiological/p1/ecg/h10/raw"));
  CHECK_NOTHROW(validate_publish_topic(expression_topic("p1")));
  CHECK_NOTHROW(validate_publish_topic(affective_state_topic("p1")));
  CHECK_NOTHROW(validate_publish_topic(kExperimentEventsTopic));
  CHECK(expression_topic("p1") == "/humans/expressions/p1");
  CHECK(affective_state_topic("p2") == "/humans/affective_state/p2");
  CHECK_THROWS_AS(validate_publish_topic("/humans/expressions/P1"), TopicError);
  CHECK_THROWS_AS(validate_publish_topic("/humans/expressions/p1/x"), TopicError);
  CHECK_THROWS_AS(validate_publish_topic("/experiment/events/x"), TopicError);
  CHECK_THROWS_AS(validate_publish_topic("/other"), TopicError);
}

TEST_CASE("pattern parsing") {
  CHECK_NOTHROW(TopicPattern("/humans/physiological/p1/ecg/h10/raw"));
  CHECK_NOTHROW(TopicPattern("/humans/physiological/p1/**"));
  CHECK_NOTHROW(TopicPattern("/**"));
  CHECK_NOTHROW(TopicPattern("/experiment/events"));
  for (const char* bad : {"humans/**", "", "/", "/humans//x", "/humans/*", "/humans/**/raw",
                          "/humans/physiological/p1/**/", "/Humans/**", "**"}) {
    CAPTURE(bad);
    try {
      TopicPattern p(bad);
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidPattern);
    }
  }
}

TEST_CASE("pattern matching") {
  const std::string raw = "/humans/physiological/p1/ecg/h10/raw";
  const std::string feat = "/humans/physiological/p1/ecg/h10/features";
  const std::string other = "/humans/physiological/p2/ecg/h10/raw";
  TopicPattern exact(raw);
  CHECK(exact.matches(raw));
  CHECK_FALSE(exact.matches(feat));
  TopicPattern p1("/humans/physiological/p1/**");
  CHECK(p1.matches(raw));
  CHECK(p1.matches(feat));
  CHECK_FALSE(p1.matches(other));
  CHECK_FALSE(TopicPattern("/humans/physiological/p1/**").matches("/humans/physiological/p1"));
  CHECK_FALSE(TopicPattern("/humans/physiological/p/**").matches(raw));
  CHECK(TopicPattern("/**").matches(raw));
  CHECK(TopicPattern("/**").matches("/experiment/events"));
  CHECK(matches_any({exact, TopicPattern("/experiment/**")}, "/experiment/events"));
}

TEST_CASE("modality registry") {
  const auto& ecg = modality_indicators("ecg");
  CHECK(std::vector<std::string_view>(ecg.begin(), ecg.end()) ==
        std::vector<std::string_view>{"mental_emotional_stress", "physical_effort"});
  const auto& pupil = modality_indicators("pupillometry");
  CHECK(std::vector<std::string_view>(pupil.begin(), pupil.end()) ==
        std::vector<std::string_view>{"workload", "emotional_arousal", "trust"});
  try {
    modality_indicators("fnirs");
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownModality);
  }
  std::vector<std::string_view> types;
  for (const auto& m : modality_registry()) types.push_back(m.sensor_type);
  std::vector<std::string_view> expected(kSensorTypes.begin(), kSensorTypes.end());
  std::sort(types.begin(), types.end());
  std::sort(expected.begin(), expected.end());
  CHECK(types == expected);
}
