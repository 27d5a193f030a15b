#include "s4h/drivers.hpp"

#include <cmath>

#include "s4h/error.hpp"

namespace s4h {

namespace {

std::uint64_t feature_seed(std::uint64_t seed) { return seed * 0x2545F4914F6CDD1DULL + 0x1234567ULL; }

double gaussian(std::mt19937_64& rng, double sd) {
  std::normal_distribution<double> dist(0.0, sd);
  return dist(rng);
}

ParameterMap driver_parameters(SimSensor kind, const PpgSimConfig& c) {
  ParameterMap p;
  p["sampling_frequency_hz"] = c.sampling_frequency_hz;
  p["block_ms"] = c.block_ms;
  if (kind == SimSensor::Ecg) {
    p["sensor_type"] = std::string("ecg");
    p["channel"] = std::string("ecg_mv");
    p["unit"] = std::string("mV");
    p["range_min"] = -5.0;
    p["range_max"] = 5.0;
  } else {
    p["sensor_type"] = std::string("ppg");
    p["channel"] = std::string("ppg_au");
    p["unit"] = std::string("au");
    p["range_min"] = -2.0;
    p["range_max"] = 2.0;
    p["report_device_features"] = c.report_device_features;
  }
  return p;
}

}  // namespace

SimulatedDriver::SimulatedDriver(Bus& bus, Executor& exec, SimSensor kind, std::string human_id,
                                 std::string sensor_id, const PpgSimConfig& config,
                                 std::string node_name)
    : exec_(exec),
      kind_(kind),
      config_(config),
      synth_(config, kind == SimSensor::Ecg
                         ? std::span<const kernels::GaussianComponent>(kEcgTemplate)
                         : std::span<const kernels::GaussianComponent>(kPpgTemplate)),
      channel_(kind == SimSensor::Ecg ? "ecg_mv" : "ppg_au"),
      feature_rng_(feature_seed(config.rng_seed)) {
  const std::string type = kind == SimSensor::Ecg ? "ecg" : "ppg";
  raw_topic_ = physio_topic(human_id, type, sensor_id, "raw");
  truth_topic_ = physio_topic(human_id, type, sensor_id, "truth");
  device_topic_ = physio_topic(human_id, type, sensor_id, "device");
  if (node_name.empty()) node_name = type + "_driver_" + human_id + "_" + sensor_id;
  node_ = bus.create_node(node_name, driver_parameters(kind, config));
  start_ns_ = exec.clock().now_ns();
  timer_ = exec.add_periodic(std::llround(config.block_ms * 1e6), [this] { tick(); });
}

SimulatedDriver::~SimulatedDriver() { exec_.cancel(timer_); }

void SimulatedDriver::tick() {
  const double fs = config_.sampling_frequency_hz;
  const auto elapsed = exec_.clock().now_ns() - start_ns_;
  const auto due = static_cast<long long>(std::floor(static_cast<double>(elapsed) * fs / 1e9 + 1e-6));
  if (due <= emitted_) return;
  auto block = synth_.next(static_cast<std::size_t>(due - emitted_));

  const auto device_start = start_ns_ + config_.device_clock_offset_ns;
  PhysioRaw raw;
  raw.device_timestamp_ns =
      device_start + std::llround(static_cast<double>(emitted_) * 1e9 / fs);
  raw.channels.push_back({channel_, std::move(block.samples)});
  node_->publish(raw_topic_, std::move(raw));
  emitted_ = due;
  ++blocks_;

  for (const auto& beat : block.beats) {
    const auto beat_rel_ns = std::llround(beat.time_s * 1e9);
    node_->publish(truth_topic_, BeatTruth{{}, start_ns_ + beat_rel_ns});
    if (kind_ == SimSensor::Ppg && config_.report_device_features) {
      const auto dev_ts = device_start + beat_rel_ns;
      const double rr = beat.rr_ms + gaussian(feature_rng_, 1.0);
      const double hr = 60000.0 / beat.rr_ms + gaussian(feature_rng_, 0.5);
      node_->publish(device_topic_, DeviceFeature{{}, dev_ts, "rr_ms", rr});
      node_->publish(device_topic_, DeviceFeature{{}, dev_ts, "heart_rate_bpm", hr});
    }
  }
}

std::unique_ptr<SimulatedDriver> run_ecg_driver(Bus& bus, Executor& exec,
                                                const std::string& human_id,
                                                const std::string& sensor_id,
                                                const EcgSimConfig& config,
                                                std::string node_name) {
  PpgSimConfig c;
  static_cast<EcgSimConfig&>(c) = config;
  c.report_device_features = false;
  return std::make_unique<SimulatedDriver>(bus, exec, SimSensor::Ecg, human_id, sensor_id, c,
                                           std::move(node_name));
}

std::unique_ptr<SimulatedDriver> run_ppg_driver(Bus& bus, Executor& exec,
                                                const std::string& human_id,
                                                const std::string& sensor_id,
                                                const PpgSimConfig& config,
                                                std::string node_name) {
  return std::make_unique<SimulatedDriver>(bus, exec, SimSensor::Ppg, human_id, sensor_id, config,
                                           std::move(node_name));
}

ReplayDriver::ReplayDriver(Bus& bus, Executor& exec, const std::filesystem::path& log_path,
                           double rate, std::string node_name)
    : exec_(exec), contents_(read_log(log_path)), rate_(rate) {
  if (!(rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "replay rate must be > 0");
  node_ = bus.create_node(node_name, ParameterMap{{"log_path", log_path.string()}, {"rate", rate}});
  start_ns_ = exec.clock().now_ns();
  schedule_next();
}

ReplayDriver::~ReplayDriver() { exec_.cancel(timer_); }

void ReplayDriver::schedule_next() {
  if (finished()) return;
  const auto& recs = contents_.records;
  const auto gap = recs[next_].recv_bus_time_ns - recs.front().recv_bus_time_ns;
  const auto at = start_ns_ + std::llround(static_cast<double>(gap) / rate_);
  timer_ = exec_.add_oneshot(at, [this] {
    const auto& r = contents_.records[next_];
    node_->publish_envelope(r.topic, r.payload);
    ++next_;
    schedule_next();
  });
}

std::unique_ptr<ReplayDriver> run_replay_driver(Bus& bus, Executor& exec,
                                                const std::filesystem::path& log_path,
                                                double rate, std::string node_name) {
  return std::make_unique<ReplayDriver>(bus, exec, log_path, rate, std::move(node_name));
}

}  // namespace s4h
