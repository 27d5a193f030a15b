#pragma once

// Node graphs from JSON launch files. Format: docs/launch-config.md.

#include <filesystem>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "s4h/bus.hpp"
#include "s4h/drivers.hpp"
#include "s4h/executor.hpp"
#include "s4h/fusion.hpp"
#include "s4h/interpreters.hpp"

namespace s4h {

inline constexpr std::string_view kNodeKinds[] = {
    "ecg_driver", "ppg_driver", "ecg_interpreter", "ppg_interpreter",
    "fusion",     "expression_script", "replay"};

struct DriverSpec {
  SimSensor sensor;
  std::string human_id, sensor_id, node_name;
  PpgSimConfig config;
};
struct InterpreterSpec {
  HeartSensor sensor;
  std::string human_id, sensor_id;
  InterpreterConfig config;
};
struct ReplaySpec {
  std::filesystem::path path;
  double rate = 1.0;
  std::string node_name = "replay";
};
using NodeSpec = std::variant<DriverSpec, InterpreterSpec, FusionConfig, ExpressionScriptConfig,
                              ReplaySpec>;

struct LaunchConfig {
  std::vector<NodeSpec> nodes;
};

// Validates every entry; throws Error{InvalidConfig} naming the offending
// node index. Relative replay paths resolve against base_dir.
LaunchConfig parse_launch_config(const nlohmann::json& j,
                                 const std::filesystem::path& base_dir = {});
LaunchConfig load_launch_config(const std::filesystem::path& path);

std::string_view kind_of(const NodeSpec& spec);

// Owns the running nodes; destruction stops them in reverse order.
class Launch {
 public:
  Launch(Bus& bus, Executor& exec, const LaunchConfig& config);
  ~Launch();
  Launch(const Launch&) = delete;
  Launch& operator=(const Launch&) = delete;

  std::size_t size() const { return stoppers_.size(); }
  // True once every replay node has published its whole log.
  bool replays_finished() const;

 private:
  std::vector<std::shared_ptr<void>> stoppers_;
  std::vector<const ReplayDriver*> replays_;
};

}  // namespace s4h
