#include "s4h/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace s4h::kernels {

namespace {

struct Reach {
  double before_s;  // how far before the beat the template reaches
  double after_s;
};

Reach template_reach(std::span<const GaussianComponent> components) {
  Reach r{0.0, 0.0};
  for (const auto& c : components) {
    r.before_s = std::max(r.before_s, -(c.offset_ms - kSupportWidths * c.width_ms) / 1000.0);
    r.after_s = std::max(r.after_s, (c.offset_ms + kSupportWidths * c.width_ms) / 1000.0);
  }
  return r;
}

// Shared by both kernels so the arithmetic is identical.
inline double component_value(const GaussianComponent& c, double dt_ms) {
  const double z = dt_ms / c.width_ms;
  return c.amplitude * std::exp(-0.5 * z * z);
}

inline bool in_support(const GaussianComponent& c, double dt_ms) {
  return std::abs(dt_ms) <= kSupportWidths * c.width_ms;
}

inline double sample_time_s(long long index, double fs_hz) {
  return static_cast<double>(index) / fs_hz;
}

}  // namespace

void render_beats_serial(std::span<double> out, long long first_index, double fs_hz,
                         std::span<const double> beat_times_s,
                         std::span<const GaussianComponent> components) {
  const auto reach = template_reach(components);
  const auto n = static_cast<long long>(out.size());
  for (double beat : beat_times_s) {
    // Superset of affected samples; in_support() decides exactly.
    auto lo = static_cast<long long>(std::floor((beat - reach.before_s) * fs_hz)) - 1 - first_index;
    auto hi = static_cast<long long>(std::ceil((beat + reach.after_s) * fs_hz)) + 1 - first_index;
    lo = std::max(lo, 0LL);
    hi = std::min(hi, n - 1);
    for (long long i = lo; i <= hi; ++i) {
      const double t = sample_time_s(first_index + i, fs_hz);
      for (const auto& c : components) {
        const double dt_ms = (t - beat) * 1000.0 - c.offset_ms;
        if (in_support(c, dt_ms)) out[static_cast<std::size_t>(i)] += component_value(c, dt_ms);
      }
    }
  }
}

void render_beats_omp(std::span<double> out, long long first_index, double fs_hz,
                      std::span<const double> beat_times_s,
                      std::span<const GaussianComponent> components) {
  const auto reach = template_reach(components);
  const auto n = static_cast<long long>(out.size());
  const double margin_s = 2.0 / fs_hz;
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) {
    const double t = sample_time_s(first_index + i, fs_hz);
    auto first = std::lower_bound(beat_times_s.begin(), beat_times_s.end(),
                                  t - reach.after_s - margin_s);
    auto last = std::upper_bound(first, beat_times_s.end(), t + reach.before_s + margin_s);
    double acc = out[static_cast<std::size_t>(i)];
    for (auto it = first; it != last; ++it) {
      for (const auto& c : components) {
        const double dt_ms = (t - *it) * 1000.0 - c.offset_ms;
        if (in_support(c, dt_ms)) acc += component_value(c, dt_ms);
      }
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
}

std::vector<HrvSummary> batch_hrv_serial(std::span<const std::vector<double>> windows) {
  std::vector<HrvSummary> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(summarize(w));
  return out;
}

std::vector<HrvSummary> batch_hrv_omp(std::span<const std::vector<double>> windows) {
  std::vector<HrvSummary> out(windows.size());
  const auto n = static_cast<long long>(windows.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = summarize(windows[static_cast<std::size_t>(i)]);
  }
  return out;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace s4h::kernels
