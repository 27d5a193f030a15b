#include "s4h/synth.hpp"

#include <algorithm>
#include <cmath>

#include "s4h/error.hpp"

namespace s4h {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double gaussian(std::mt19937_64& rng, double mean, double sd) {
  if (sd <= 0.0) return mean;
  std::normal_distribution<double> dist(mean, sd);
  return dist(rng);
}

SynthResult run(const EcgSimConfig& config, double duration_s,
                std::span<const kernels::GaussianComponent> tmpl) {
  if (!(duration_s >= 0.0)) throw Error(ErrorCode::InvalidConfig, "duration must be >= 0");
  BeatSynth synth(config, tmpl);
  const auto n = static_cast<std::size_t>(std::llround(duration_s * config.sampling_frequency_hz));
  auto block = synth.next(n);
  SynthResult out;
  out.samples = std::move(block.samples);
  for (const auto& b : block.beats) {
    out.true_beat_times_ns.push_back(std::llround(b.time_s * 1e9));
    out.rr_ms.push_back(b.rr_ms);
  }
  return out;
}

}  // namespace

void validate(const EcgSimConfig& c) {
  auto fail = [](const char* what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (!(c.sampling_frequency_hz > 0.0)) fail("sampling_frequency_hz must be > 0");
  if (!(c.mean_hr_bpm > 20.0 && c.mean_hr_bpm < 250.0)) fail("mean_hr_bpm must be in (20, 250)");
  if (!(c.rr_jitter_sd_ms >= 0.0)) fail("rr_jitter_sd_ms must be >= 0");
  if (!(c.noise_sd_mv >= 0.0)) fail("noise_sd_mv must be >= 0");
  if (!(c.block_ms > 0.0)) fail("block_ms must be > 0");
}

BeatSynth::BeatSynth(const EcgSimConfig& config,
                     std::span<const kernels::GaussianComponent> components)
    : fs_(config.sampling_frequency_hz),
      mean_rr_ms_(60000.0 / config.mean_hr_bpm),
      jitter_sd_ms_(config.rr_jitter_sd_ms),
      noise_sd_(config.noise_sd_mv),
      components_(components.begin(), components.end()),
      rr_rng_(splitmix64(config.rng_seed)),
      noise_rng_(splitmix64(config.rng_seed ^ 0xA5A5A5A5A5A5A5A5ULL)) {
  validate(config);
  for (const auto& c : components_) {
    reach_before_s_ =
        std::max(reach_before_s_, -(c.offset_ms - kernels::kSupportWidths * c.width_ms) / 1000.0);
    reach_after_s_ =
        std::max(reach_after_s_, (c.offset_ms + kernels::kSupportWidths * c.width_ms) / 1000.0);
  }
}

void BeatSynth::extend_beats(double until_s) {
  while (beats_.empty() || beats_.back().time_s <= until_s) {
    const double rr =
        std::clamp(gaussian(rr_rng_, mean_rr_ms_, jitter_sd_ms_), kRrClampMinMs, kRrClampMaxMs);
    const double t = beats_.empty() ? 0.5 * rr / 1000.0 : beats_.back().time_s + rr / 1000.0;
    beats_.push_back({t, rr});
  }
}

SynthBlock BeatSynth::next(std::size_t n_samples) {
  SynthBlock block;
  block.samples.assign(n_samples, 0.0);
  const long long first = position_;
  const long long end = position_ + static_cast<long long>(n_samples);
  const double t_start = static_cast<double>(first) / fs_;
  const double t_end = static_cast<double>(end) / fs_;
  extend_beats(t_end + reach_before_s_ + 1.0);

  // Beats that can touch this block; sample margins mirror the kernel's.
  const double margin = 2.0 / fs_;
  while (first_live_beat_ < beats_.size() &&
         beats_[first_live_beat_].time_s < t_start - reach_after_s_ - margin) {
    ++first_live_beat_;
  }
  std::vector<double> times;
  for (std::size_t k = first_live_beat_; k < beats_.size(); ++k) {
    const auto& b = beats_[k];
    if (b.time_s > t_end + reach_before_s_ + margin) break;
    times.push_back(b.time_s);
    if (b.time_s >= t_start && b.time_s < t_end) block.beats.push_back(b);
  }
  kernels::render_beats_omp(block.samples, first, fs_, times, components_);
  for (auto& v : block.samples) v += gaussian(noise_rng_, 0.0, noise_sd_);
  position_ = end;
  return block;
}

SynthResult synth_ecg(const EcgSimConfig& config, double duration_s) {
  return run(config, duration_s, kEcgTemplate);
}

SynthResult synth_ppg(const PpgSimConfig& config, double duration_s) {
  return run(config, duration_s, kPpgTemplate);
}

}  // namespace s4h
