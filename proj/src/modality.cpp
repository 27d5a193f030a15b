#include "s4h/modality.hpp"

#include <string>

#include "s4h/error.hpp"

namespace s4h {

const std::vector<ModalityInfo>& modality_registry() {
  static const std::vector<ModalityInfo> registry = {
      {"eeg", "multi-channel brain activity", {"workload", "stress"}},
      {"ppg", "variations in blood volume", {"anxiety", "cognitive_effort"}},
      {"ecg", "electrical activity of the heart", {"mental_emotional_stress", "physical_effort"}},
      {"eda", "electrical conductivity of the skin", {"emotional_arousal", "mental_load"}},
      {"emg", "electrical activity of skeletal muscles", {"motor_control", "motor_intention"}},
      {"eye_tracking", "visual attention and gaze behavior", {"attention", "engagement", "intention"}},
      {"eog", "corneo-retinal potential difference", {"eye_movement", "blink", "gaze_direction"}},
      {"pupillometry", "pupil diameter changes", {"workload", "emotional_arousal", "trust"}},
      {"respiration", "breathing rate and variability", {"arousal", "workload", "effort"}},
  };
  return registry;
}

const ModalityInfo& modality_info(std::string_view sensor_type) {
  for (const auto& m : modality_registry()) {
    if (m.sensor_type == sensor_type) return m;
  }
  throw Error(ErrorCode::UnknownModality, "'" + std::string(sensor_type) + "'");
}

const std::vector<std::string_view>& modality_indicators(std::string_view sensor_type) {
  return modality_info(sensor_type).indicators;
}

}  // namespace s4h
