#pragma once

// Interpreter nodes: consume raw blocks, detect beats, maintain an RR window
// and publish derived features. The PPG interpreter also compares its heart
// rate against the value the device reports itself.

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "s4h/bus.hpp"
#include "s4h/executor.hpp"
#include "s4h/hrv.hpp"
#include "s4h/peak_detector.hpp"
#include "s4h/timesync.hpp"

namespace s4h {

enum class HeartSensor { Ecg, Ppg };

struct InterpreterConfig {
  double window_s = 60.0;
  double publish_hz = 1.0;
  // Unset: resolved from the driver node's sampling_frequency_hz parameter.
  std::optional<double> sampling_frequency_hz;
  // Unset: 150 ms for ECG, 300 ms for PPG.
  std::optional<double> integration_ms;
  std::string node_name;
};

class HeartInterpreter {
 public:
  HeartInterpreter(Bus& bus, Executor& exec, HeartSensor kind, std::string human_id,
                   std::string sensor_id, InterpreterConfig config = {});
  ~HeartInterpreter();
  HeartInterpreter(const HeartInterpreter&) = delete;
  HeartInterpreter& operator=(const HeartInterpreter&) = delete;

  const std::string& features_topic() const { return features_topic_; }
  const std::string& node_name() const { return node_->name(); }

  // Publishes a feature message if at least two RR intervals are in the
  // window. Called by the publish timer.
  void tick();

  std::uint64_t features_published() const;
  std::optional<std::int64_t> offset_estimate_ns() const;
  std::optional<Discrepancy> last_discrepancy() const;
  std::size_t peaks_detected() const;

 private:
  void on_raw(const Delivery& d);
  void on_device(const Delivery& d);
  void process_block(const PhysioRaw& raw, std::int64_t recv_ns);
  bool resolve_sampling_rate();

  std::unique_ptr<Node> node_;
  Executor& exec_;
  HeartSensor kind_;
  InterpreterConfig config_;
  std::string raw_topic_, device_topic_, features_topic_;

  mutable std::mutex mu_;
  std::optional<double> fs_;
  std::string raw_publisher_;
  std::deque<std::pair<PhysioRaw, std::int64_t>> pending_;  // held until fs is known
  std::unique_ptr<PeakDetector> detector_;
  RrWindow window_;
  std::deque<std::int64_t> peak_times_;
  std::optional<std::int64_t> last_peak_;
  std::int64_t latest_device_ns_ = 0;
  std::size_t peaks_ = 0;
  OffsetEstimator offset_;
  std::optional<double> device_hr_;
  std::optional<Discrepancy> discrepancy_;
  std::uint64_t published_ = 0;

  Subscription raw_sub_, device_sub_;
  Executor::TimerId timer_ = 0;
};

std::unique_ptr<HeartInterpreter> run_ecg_interpreter(Bus& bus, Executor& exec,
                                                      const std::string& human_id,
                                                      const std::string& sensor_id,
                                                      InterpreterConfig config = {});
std::unique_ptr<HeartInterpreter> run_ppg_interpreter(Bus& bus, Executor& exec,
                                                      const std::string& human_id,
                                                      const std::string& sensor_id,
                                                      InterpreterConfig config = {});

}  // namespace s4h
