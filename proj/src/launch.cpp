#include "s4h/launch.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "s4h/error.hpp"
#include "s4h/topic.hpp"

namespace s4h {

using nlohmann::json;

namespace {

[[noreturn]] void fail(std::size_t index, const std::string& what) {
  throw Error(ErrorCode::InvalidConfig, "nodes[" + std::to_string(index) + "]: " + what);
}

class Params {
 public:
  Params(std::size_t index, json j) : index_(index), j_(std::move(j)) {
    if (!j_.is_null() && !j_.is_object()) fail(index_, "params must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (j_.is_null() || !j_.contains(key)) return;
    const auto& v = j_.at(key);
    bool ok;
    if constexpr (std::is_same_v<T, bool>) {
      ok = v.is_boolean();
    } else if constexpr (std::is_integral_v<T>) {
      ok = v.is_number_integer();
    } else if constexpr (std::is_floating_point_v<T>) {
      ok = v.is_number();
    } else {
      ok = v.is_string();
    }
    if (!ok) fail(index_, std::string("param '") + key + "' has the wrong type");
    out = v.get<T>();
  }

  template <typename T>
  void read(const char* key, std::optional<T>& out) {
    T tmp{};
    seen_.insert(key);
    if (j_.is_null() || !j_.contains(key)) return;
    read(key, tmp);
    out = tmp;
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    if (j_.is_null() || !j_.contains(key)) return nullptr;
    return &j_.at(key);
  }

  void finish() const {
    if (j_.is_null()) return;
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.count(k)) fail(index_, "unknown param '" + k + "'");
    }
  }

 private:
  std::size_t index_;
  json j_;
  std::set<std::string> seen_;
};

std::string token_field(std::size_t i, const json& node, const char* key) {
  if (!node.contains(key) || !node.at(key).is_string()) {
    fail(i, std::string("'") + key + "' must be a string");
  }
  auto s = node.at(key).get<std::string>();
  if (!is_valid_token(s)) fail(i, std::string("'") + key + "' is not a valid topic token");
  return s;
}

EcgSimConfig read_sim(Params& p, PpgSimConfig& c) {
  p.read("sampling_frequency_hz", c.sampling_frequency_hz);
  p.read("mean_hr_bpm", c.mean_hr_bpm);
  p.read("rr_jitter_sd_ms", c.rr_jitter_sd_ms);
  p.read("noise_sd_mv", c.noise_sd_mv);
  p.read("rng_seed", c.rng_seed);
  p.read("block_ms", c.block_ms);
  p.read("device_clock_offset_ns", c.device_clock_offset_ns);
  return c;
}

std::vector<ExpressionCue> read_timeline(std::size_t i, const json* t) {
  std::vector<ExpressionCue> out;
  if (!t) return out;
  if (!t->is_array()) fail(i, "timeline must be an array");
  for (const auto& cue : *t) {
    json ts, ex;
    if (cue.is_array() && cue.size() == 2) {
      ts = cue[0];
      ex = cue[1];
    } else if (cue.is_object() && cue.contains("t_s") && cue.contains("expression")) {
      ts = cue["t_s"];
      ex = cue["expression"];
    } else {
      fail(i, "timeline entries are [t_s, expression] or {t_s, expression}");
    }
    if (!ts.is_number() || !ex.is_string()) fail(i, "timeline entry has the wrong types");
    auto e = expression_from_string(ex.get<std::string>());
    if (!e) fail(i, "unknown expression '" + ex.get<std::string>() + "'");
    if (ts.get<double>() < 0) fail(i, "timeline times must be >= 0");
    out.push_back({ts.get<double>(), *e});
  }
  if (!std::is_sorted(out.begin(), out.end(),
                      [](const auto& a, const auto& b) { return a.t_s < b.t_s; })) {
    fail(i, "timeline must be sorted by t_s");
  }
  return out;
}

NodeSpec parse_node(std::size_t i, const json& node, const std::filesystem::path& base_dir) {
  if (!node.is_object()) fail(i, "entry must be an object");
  for (const auto& [k, _] : node.items()) {
    if (k != "kind" && k != "human_id" && k != "sensor_id" && k != "params") {
      fail(i, "unknown key '" + k + "'");
    }
  }
  if (!node.contains("kind") || !node["kind"].is_string()) fail(i, "'kind' must be a string");
  const auto kind = node["kind"].get<std::string>();
  Params p(i, node.contains("params") ? node["params"] : json());

  try {
    if (kind == "ecg_driver" || kind == "ppg_driver") {
      DriverSpec s;
      s.sensor = kind == "ecg_driver" ? SimSensor::Ecg : SimSensor::Ppg;
      s.human_id = token_field(i, node, "human_id");
      s.sensor_id = token_field(i, node, "sensor_id");
      read_sim(p, s.config);
      if (s.sensor == SimSensor::Ppg) p.read("report_device_features", s.config.report_device_features);
      p.read("node_name", s.node_name);
      p.finish();
      validate(s.config);
      return s;
    }
    if (kind == "ecg_interpreter" || kind == "ppg_interpreter") {
      InterpreterSpec s;
      s.sensor = kind == "ecg_interpreter" ? HeartSensor::Ecg : HeartSensor::Ppg;
      s.human_id = token_field(i, node, "human_id");
      s.sensor_id = token_field(i, node, "sensor_id");
      p.read("window_s", s.config.window_s);
      p.read("publish_hz", s.config.publish_hz);
      p.read("sampling_frequency_hz", s.config.sampling_frequency_hz);
      p.read("integration_ms", s.config.integration_ms);
      p.read("node_name", s.config.node_name);
      p.finish();
      if (!(s.config.window_s > 0) || !(s.config.publish_hz > 0)) {
        fail(i, "window_s and publish_hz must be > 0");
      }
      if (s.config.sampling_frequency_hz && !(*s.config.sampling_frequency_hz > 0)) {
        fail(i, "sampling_frequency_hz must be > 0");
      }
      return s;
    }
    if (kind == "fusion") {
      FusionConfig c;
      c.human_id = token_field(i, node, "human_id");
      p.read("hr_threshold_bpm", c.hr_threshold_bpm);
      p.read("staleness_s", c.staleness_s);
      p.read("publish_hz", c.publish_hz);
      p.read("ecg_features_topic", c.ecg_features_topic);
      p.read("ppg_features_topic", c.ppg_features_topic);
      p.read("expression_topic", c.expression_topic);
      p.read("node_name", c.node_name);
      p.finish();
      c.validate();
      return c;
    }
    if (kind == "expression_script") {
      ExpressionScriptConfig c;
      c.human_id = token_field(i, node, "human_id");
      c.timeline = read_timeline(i, p.raw("timeline"));
      p.read("rate_hz", c.rate_hz);
      p.read("confidence", c.confidence);
      p.read("node_name", c.node_name);
      p.finish();
      if (c.timeline.empty()) fail(i, "timeline must not be empty");
      if (!(c.rate_hz > 0)) fail(i, "rate_hz must be > 0");
      if (!(c.confidence >= 0 && c.confidence <= 1)) fail(i, "confidence must be in [0, 1]");
      return c;
    }
    if (kind == "replay") {
      ReplaySpec s;
      std::string path;
      p.read("path", path);
      p.read("rate", s.rate);
      p.read("node_name", s.node_name);
      p.finish();
      if (path.empty()) fail(i, "replay needs params.path");
      if (!(s.rate > 0)) fail(i, "rate must be > 0");
      s.path = path;
      if (s.path.is_relative() && !base_dir.empty()) s.path = base_dir / s.path;
      return s;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig && std::string_view(e.what()).find("nodes[") != std::string_view::npos) {
      throw;
    }
    fail(i, e.what());
  }
  fail(i, "unknown kind '" + kind + "'");
}

}  // namespace

LaunchConfig parse_launch_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array()) {
    throw Error(ErrorCode::InvalidConfig, "config must be an object with a 'nodes' array");
  }
  LaunchConfig out;
  for (std::size_t i = 0; i < j["nodes"].size(); ++i) {
    out.nodes.push_back(parse_node(i, j["nodes"][i], base_dir));
  }
  return out;
}

LaunchConfig load_launch_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return parse_launch_config(j, path.parent_path());
}

std::string_view kind_of(const NodeSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::string_view {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DriverSpec>) {
          return s.sensor == SimSensor::Ecg ? "ecg_driver" : "ppg_driver";
        } else if constexpr (std::is_same_v<T, InterpreterSpec>) {
          return s.sensor == HeartSensor::Ecg ? "ecg_interpreter" : "ppg_interpreter";
        } else if constexpr (std::is_same_v<T, FusionConfig>) {
          return "fusion";
        } else if constexpr (std::is_same_v<T, ExpressionScriptConfig>) {
          return "expression_script";
        } else {
          return "replay";
        }
      },
      spec);
}

Launch::Launch(Bus& bus, Executor& exec, const LaunchConfig& config) {
  try {
    for (const auto& spec : config.nodes) {
      std::visit(
          [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, DriverSpec>) {
              auto d = s.sensor == SimSensor::Ecg
                           ? run_ecg_driver(bus, exec, s.human_id, s.sensor_id, s.config, s.node_name)
                           : run_ppg_driver(bus, exec, s.human_id, s.sensor_id, s.config, s.node_name);
              stoppers_.push_back(std::shared_ptr<SimulatedDriver>(std::move(d)));
            } else if constexpr (std::is_same_v<T, InterpreterSpec>) {
              auto n = s.sensor == HeartSensor::Ecg
                           ? run_ecg_interpreter(bus, exec, s.human_id, s.sensor_id, s.config)
                           : run_ppg_interpreter(bus, exec, s.human_id, s.sensor_id, s.config);
              stoppers_.push_back(std::shared_ptr<HeartInterpreter>(std::move(n)));
            } else if constexpr (std::is_same_v<T, FusionConfig>) {
              stoppers_.push_back(std::shared_ptr<FusionNode>(run_fusion_node(bus, exec, s)));
            } else if constexpr (std::is_same_v<T, ExpressionScriptConfig>) {
              stoppers_.push_back(std::make_shared<ExpressionScript>(bus, exec, s));
            } else {
              auto r = std::shared_ptr<ReplayDriver>(run_replay_driver(bus, exec, s.path, s.rate, s.node_name));
              replays_.push_back(r.get());
              stoppers_.push_back(r);
            }
          },
          spec);
    }
  } catch (...) {
    while (!stoppers_.empty()) stoppers_.pop_back();
    throw;
  }
}

Launch::~Launch() {
  while (!stoppers_.empty()) stoppers_.pop_back();
}

bool Launch::replays_finished() const {
  return std::all_of(replays_.begin(), replays_.end(), [](const auto* r) { return r->finished(); });
}

}  // namespace s4h
