#include "s4h/interpreters.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

#include "s4h/error.hpp"

namespace s4h {

namespace {

constexpr std::size_t kMaxPendingBlocks = 600;

}  // namespace

HeartInterpreter::HeartInterpreter(Bus& bus, Executor& exec, HeartSensor kind,
                                   std::string human_id, std::string sensor_id,
                                   InterpreterConfig config)
    : exec_(exec), kind_(kind), config_(std::move(config)), window_(config_.window_s) {
  if (!(config_.publish_hz > 0.0)) throw Error(ErrorCode::InvalidConfig, "publish_hz must be > 0");
  const std::string type = kind == HeartSensor::Ecg ? "ecg" : "ppg";
  raw_topic_ = physio_topic(human_id, type, sensor_id, "raw");
  device_topic_ = physio_topic(human_id, type, sensor_id, "device");
  features_topic_ = physio_topic(human_id, type, sensor_id, "features");
  auto name = config_.node_name.empty() ? type + "_interpreter_" + human_id + "_" + sensor_id
                                        : config_.node_name;
  node_ = bus.create_node(name, ParameterMap{{"window_s", config_.window_s},
                                             {"publish_hz", config_.publish_hz},
                                             {"input_topic", raw_topic_},
                                             {"output_topic", features_topic_}});
  fs_ = config_.sampling_frequency_hz;
  if (fs_ && !(*fs_ > 0.0)) throw Error(ErrorCode::InvalidConfig, "sampling_frequency_hz must be > 0");

  raw_sub_ = node_->subscribe(raw_topic_, [this](const Delivery& d) { on_raw(d); });
  if (kind_ == HeartSensor::Ppg) {
    device_sub_ = node_->subscribe(device_topic_, [this](const Delivery& d) { on_device(d); });
  }
  timer_ = exec_.add_periodic(std::llround(1e9 / config_.publish_hz), [this] { tick(); });
}

HeartInterpreter::~HeartInterpreter() {
  exec_.cancel(timer_);
  raw_sub_.reset();
  device_sub_.reset();
}

void HeartInterpreter::on_raw(const Delivery& d) {
  if (d.schema != SchemaId::PhysioRaw) return;
  auto raw = std::get<PhysioRaw>(d.decode());
  std::lock_guard lock(mu_);
  if (!fs_) {
    raw_publisher_ = d.publisher;
    pending_.emplace_back(std::move(raw), d.recv_time_ns);
    if (pending_.size() > kMaxPendingBlocks) pending_.pop_front();
    return;
  }
  process_block(raw, d.recv_time_ns);
}

void HeartInterpreter::on_device(const Delivery& d) {
  if (d.schema != SchemaId::DeviceFeature) return;
  auto f = std::get<DeviceFeature>(d.decode());
  if (f.name != "heart_rate_bpm") return;
  std::lock_guard lock(mu_);
  device_hr_ = f.value;
}

// Caller holds mu_.
void HeartInterpreter::process_block(const PhysioRaw& raw, std::int64_t recv_ns) {
  if (raw.channels.empty()) return;
  const auto& samples = raw.channels.front().samples;
  if (!detector_) {
    PeakDetectorConfig dc;
    dc.fs_hz = *fs_;
    dc.integration_ms =
        config_.integration_ms.value_or(kind_ == HeartSensor::Ecg ? 150.0 : 300.0);
    detector_ = std::make_unique<PeakDetector>(dc);
  }
  // The block is complete when its last sample exists; that is the device
  // instant closest to receipt.
  const auto block_end_ns =
      raw.device_timestamp_ns + std::llround(static_cast<double>(samples.size()) * 1e9 / *fs_);
  offset_.observe(block_end_ns, recv_ns);
  latest_device_ns_ = block_end_ns;

  for (auto peak : detector_->detect(samples, raw.device_timestamp_ns)) {
    ++peaks_;
    peak_times_.push_back(peak);
    if (last_peak_) {
      const double rr = static_cast<double>(peak - *last_peak_) / 1e6;
      window_.push(peak, rr);
    }
    last_peak_ = peak;
  }
}

bool HeartInterpreter::resolve_sampling_rate() {
  std::string publisher;
  {
    std::lock_guard lock(mu_);
    if (fs_) return true;
    publisher = raw_publisher_;
  }
  if (publisher.empty()) return false;
  std::optional<double> fs;
  try {
    auto reply = node_->get_parameters(publisher, {"sampling_frequency_hz"});
    if (!reply.empty() && reply.front().second) {
      if (auto* v = std::get_if<double>(&*reply.front().second)) fs = *v;
      if (auto* v = std::get_if<std::int64_t>(&*reply.front().second)) fs = static_cast<double>(*v);
    }
  } catch (const Error& e) {
    spdlog::warn("{}: cannot query sampling rate of {}: {}", node_->name(), publisher, e.what());
    return false;
  }
  if (!fs || !(*fs > 0.0)) return false;
  std::lock_guard lock(mu_);
  fs_ = fs;
  while (!pending_.empty()) {
    process_block(pending_.front().first, pending_.front().second);
    pending_.pop_front();
  }
  return true;
}

void HeartInterpreter::tick() {
  if (!resolve_sampling_rate()) return;
  HeartFeatures f;
  std::optional<Discrepancy> disc;
  std::optional<std::int64_t> offset;
  {
    std::lock_guard lock(mu_);
    window_.evict_before(latest_device_ns_);
    const auto cutoff = latest_device_ns_ - static_cast<std::int64_t>(config_.window_s * 1e9);
    while (!peak_times_.empty() && peak_times_.front() < cutoff) peak_times_.pop_front();
    if (window_.size() < 2) return;  // withheld, never zero-filled
    const auto rr = window_.values();
    const auto s = summarize(rr);
    f.device_timestamp_ns = latest_device_ns_;
    f.rr_ms = window_.latest();
    f.peak_count = static_cast<std::uint32_t>(peak_times_.size());
    f.sdnn_ms = s.sdnn_ms;
    f.rmssd_ms = s.rmssd_ms;
    f.pnn50_pct = s.pnn50_pct;
    f.heart_rate_bpm = s.heart_rate_bpm;
    f.window_s = config_.window_s;
    if (kind_ == HeartSensor::Ppg && device_hr_) {
      discrepancy_ = feature_discrepancy(*device_hr_, s.heart_rate_bpm);
      disc = discrepancy_;
    }
    offset = offset_.estimate();
    ++published_;
  }
  if (kind_ == HeartSensor::Ecg) {
    node_->publish(features_topic_, EcgFeatures{f});
  } else {
    node_->publish(features_topic_, PpgFeatures{f});
  }
  if (disc) {
    spdlog::debug("{}: device vs computed HR |diff| = {:.3f} bpm ({:.4f})", node_->name(),
                  disc->abs_diff, disc->rel_diff);
    node_->set_status("discrepancy_last_abs", disc->abs_diff);
    node_->set_status("discrepancy_last_rel", disc->rel_diff);
  }
  if (offset) node_->set_status("offset_estimate_ns", *offset);
}

std::uint64_t HeartInterpreter::features_published() const {
  std::lock_guard lock(mu_);
  return published_;
}

std::optional<std::int64_t> HeartInterpreter::offset_estimate_ns() const {
  std::lock_guard lock(mu_);
  return offset_.estimate();
}

std::optional<Discrepancy> HeartInterpreter::last_discrepancy() const {
  std::lock_guard lock(mu_);
  return discrepancy_;
}

std::size_t HeartInterpreter::peaks_detected() const {
  std::lock_guard lock(mu_);
  return peaks_;
}

std::unique_ptr<HeartInterpreter> run_ecg_interpreter(Bus& bus, Executor& exec,
                                                      const std::string& human_id,
                                                      const std::string& sensor_id,
                                                      InterpreterConfig config) {
  return std::make_unique<HeartInterpreter>(bus, exec, HeartSensor::Ecg, human_id, sensor_id,
                                            std::move(config));
}

std::unique_ptr<HeartInterpreter> run_ppg_interpreter(Bus& bus, Executor& exec,
                                                      const std::string& human_id,
                                                      const std::string& sensor_id,
                                                      InterpreterConfig config) {
  return std::make_unique<HeartInterpreter>(bus, exec, HeartSensor::Ppg, human_id, sensor_id,
                                            std::move(config));
}

}  // namespace s4h
