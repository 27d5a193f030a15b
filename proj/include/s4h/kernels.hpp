#pragma once

// Data-parallel inner loops. Each kernel has a plain serial version kept as
// the reference for tests and benchmarks; the OpenMP version must produce
// bit-identical output.

#include <span>
#include <vector>

#include "s4h/hrv.hpp"

namespace s4h::kernels {

// One Gaussian bump of a beat template, positioned relative to the beat time.
struct GaussianComponent {
  double amplitude;
  double offset_ms;
  double width_ms;  // standard deviation
};

// Components contribute only within this many widths of their center.
inline constexpr double kSupportWidths = 6.0;

// Adds the template sum of every beat to out[i], where sample i sits at
// time (first_index + i) / fs seconds. beat_times_s must be sorted.
// Serial version scatters beat by beat.
void render_beats_serial(std::span<double> out, long long first_index, double fs_hz,
                         std::span<const double> beat_times_s,
                         std::span<const GaussianComponent> components);
// Parallel version gathers per sample.
void render_beats_omp(std::span<double> out, long long first_index, double fs_hz,
                      std::span<const double> beat_times_s,
                      std::span<const GaussianComponent> components);

std::vector<HrvSummary> batch_hrv_serial(std::span<const std::vector<double>> windows);
std::vector<HrvSummary> batch_hrv_omp(std::span<const std::vector<double>> windows);

// Number of threads the OpenMP kernels would use (1 without OpenMP).
int max_threads();

}  // namespace s4h::kernels
