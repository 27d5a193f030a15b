#pragma once

#include <string_view>
#include <vector>

namespace s4h {

// Static sensor-modality registry: what each modality measures and which
// indicator categories it can provide evidence for. The mapping is
// many-to-many; several modalities share indicators.
struct ModalityInfo {
  std::string_view sensor_type;
  std::string_view measurement;
  std::vector<std::string_view> indicators;
};

const std::vector<ModalityInfo>& modality_registry();

// Throws Error{UnknownModality}.
const ModalityInfo& modality_info(std::string_view sensor_type);
const std::vector<std::string_view>& modality_indicators(std::string_view sensor_type);

}  // namespace s4h
