#pragma once

// Synthetic ECG/PPG sources with exact beat ground truth.

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "s4h/kernels.hpp"

namespace s4h {

// P, Q, R, S, T waves; offsets relative to the R peak.
inline constexpr std::array<kernels::GaussianComponent, 5> kEcgTemplate = {{
    {0.15, -80.0, 25.0},
    {-0.10, -20.0, 10.0},
    {1.00, 0.0, 12.0},
    {-0.25, 20.0, 10.0},
    {0.35, 120.0, 40.0},
}};

// Systolic peak at the beat time plus the dicrotic wave.
inline constexpr std::array<kernels::GaussianComponent, 2> kPpgTemplate = {{
    {1.00, 0.0, 90.0},
    {0.35, 250.0, 120.0},
}};

inline constexpr double kRrClampMinMs = 300.0;
inline constexpr double kRrClampMaxMs = 2000.0;

struct EcgSimConfig {
  double sampling_frequency_hz = 250.0;
  double mean_hr_bpm = 72.0;
  double rr_jitter_sd_ms = 30.0;
  double noise_sd_mv = 0.02;
  std::uint64_t rng_seed = 1;
  double block_ms = 200.0;
  std::int64_t device_clock_offset_ns = 0;
};

struct PpgSimConfig : EcgSimConfig {
  bool report_device_features = true;
};

// Throws Error{InvalidConfig}.
void validate(const EcgSimConfig& c);

struct SynthBeat {
  double time_s;  // since stream start
  double rr_ms;   // interval that ended at this beat
};

struct SynthBlock {
  std::vector<double> samples;
  std::vector<SynthBeat> beats;  // beats whose center falls inside the block
};

// Streaming generator. Output depends only on the config and the total
// number of samples requested, never on how requests are split into blocks.
class BeatSynth {
 public:
  BeatSynth(const EcgSimConfig& config, std::span<const kernels::GaussianComponent> components);

  SynthBlock next(std::size_t n_samples);
  long long position() const { return position_; }
  double fs() const { return fs_; }

 private:
  void extend_beats(double until_s);

  double fs_;
  double mean_rr_ms_;
  double jitter_sd_ms_;
  double noise_sd_;
  std::vector<kernels::GaussianComponent> components_;
  double reach_before_s_ = 0.0;
  double reach_after_s_ = 0.0;
  std::mt19937_64 rr_rng_;
  std::mt19937_64 noise_rng_;
  std::vector<SynthBeat> beats_;
  std::size_t first_live_beat_ = 0;
  long long position_ = 0;
};

struct SynthResult {
  std::vector<double> samples;
  std::vector<std::int64_t> true_beat_times_ns;  // since stream start
  std::vector<double> rr_ms;                     // per beat
};

SynthResult synth_ecg(const EcgSimConfig& config, double duration_s);
SynthResult synth_ppg(const PpgSimConfig& config, double duration_s);

}  // namespace s4h
