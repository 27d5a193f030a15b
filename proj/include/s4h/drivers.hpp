#pragma once

// Driver nodes: wrap a (here simulated) device and forward raw sample
// blocks plus device-reported features. No interpretation happens here.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "s4h/bus.hpp"
#include "s4h/executor.hpp"
#include "s4h/logfile.hpp"
#include "s4h/synth.hpp"

namespace s4h {

enum class SimSensor { Ecg, Ppg };

// Publishes PhysioRaw blocks on .../<type>/<sensor_id>/raw every block_ms,
// BeatTruth on .../truth and, for PPG with device features enabled, per-beat
// DeviceFeature "rr_ms" and "heart_rate_bpm" on .../device.
class SimulatedDriver {
 public:
  SimulatedDriver(Bus& bus, Executor& exec, SimSensor kind, std::string human_id,
                  std::string sensor_id, const PpgSimConfig& config, std::string node_name = {});
  ~SimulatedDriver();
  SimulatedDriver(const SimulatedDriver&) = delete;
  SimulatedDriver& operator=(const SimulatedDriver&) = delete;

  const std::string& raw_topic() const { return raw_topic_; }
  const std::string& truth_topic() const { return truth_topic_; }
  const std::string& device_topic() const { return device_topic_; }
  const std::string& node_name() const { return node_->name(); }
  std::int64_t start_bus_ns() const { return start_ns_; }
  std::uint64_t blocks_published() const { return blocks_; }

  // Publishes whatever samples are due at the current clock time.
  void tick();

 private:
  std::unique_ptr<Node> node_;
  Executor& exec_;
  SimSensor kind_;
  PpgSimConfig config_;
  BeatSynth synth_;
  std::string channel_;
  std::string raw_topic_, truth_topic_, device_topic_;
  std::int64_t start_ns_;
  long long emitted_ = 0;
  std::uint64_t blocks_ = 0;
  std::mt19937_64 feature_rng_;
  Executor::TimerId timer_ = 0;
};

std::unique_ptr<SimulatedDriver> run_ecg_driver(Bus& bus, Executor& exec,
                                                const std::string& human_id,
                                                const std::string& sensor_id,
                                                const EcgSimConfig& config,
                                                std::string node_name = {});
std::unique_ptr<SimulatedDriver> run_ppg_driver(Bus& bus, Executor& exec,
                                                const std::string& human_id,
                                                const std::string& sensor_id,
                                                const PpgSimConfig& config,
                                                std::string node_name = {});

// Republishes a recorded log at rate x original pacing, payloads unchanged.
class ReplayDriver {
 public:
  // Throws LogFormatError / Truncated for a bad log.
  ReplayDriver(Bus& bus, Executor& exec, const std::filesystem::path& log_path, double rate,
               std::string node_name = "replay");
  ~ReplayDriver();
  ReplayDriver(const ReplayDriver&) = delete;
  ReplayDriver& operator=(const ReplayDriver&) = delete;

  bool finished() const { return next_ >= contents_.records.size(); }
  std::size_t published() const { return next_; }

 private:
  void schedule_next();

  std::unique_ptr<Node> node_;
  Executor& exec_;
  LogContents contents_;
  double rate_;
  std::int64_t start_ns_ = 0;
  std::size_t next_ = 0;
  Executor::TimerId timer_ = 0;
};

std::unique_ptr<ReplayDriver> run_replay_driver(Bus& bus, Executor& exec,
                                                const std::filesystem::path& log_path,
                                                double rate, std::string node_name = "replay");

}  // namespace s4h
