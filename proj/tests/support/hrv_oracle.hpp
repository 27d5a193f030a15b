#pragma once

// Direct-formula HRV metrics in long double, used as the reference for the
// library implementation. Two-pass mean/variance; no shared code.

#include <cmath>
#include <vector>

namespace s4h::test {

inline long double oracle_mean(const std::vector<double>& rr) {
  long double s = 0;
  for (double v : rr) s += v;
  return s / static_cast<long double>(rr.size());
}

inline double oracle_hr(const std::vector<double>& rr) {
  return static_cast<double>(60000.0L / oracle_mean(rr));
}

inline double oracle_sdnn(const std::vector<double>& rr) {
  const long double m = oracle_mean(rr);
  long double ss = 0;
  for (double v : rr) ss += (v - m) * (v - m);
  return static_cast<double>(std::sqrt(ss / static_cast<long double>(rr.size() - 1)));
}

inline double oracle_rmssd(const std::vector<double>& rr) {
  long double ss = 0;
  for (std::size_t i = 0; i + 1 < rr.size(); ++i) {
    const long double d = static_cast<long double>(rr[i + 1]) - rr[i];
    ss += d * d;
  }
  return static_cast<double>(std::sqrt(ss / static_cast<long double>(rr.size() - 1)));
}

inline double oracle_pnn50(const std::vector<double>& rr) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < rr.size(); ++i) {
    if (std::fabs(static_cast<long double>(rr[i + 1]) - rr[i]) > 50.0L) ++n;
  }
  return 100.0 * static_cast<double>(n) / static_cast<double>(rr.size() - 1);
}

inline double rel_err(double got, double want) {
  const double scale = std::max({std::fabs(got), std::fabs(want), 1e-12});
  return std::fabs(got - want) / scale;
}

}  // namespace s4h::test
