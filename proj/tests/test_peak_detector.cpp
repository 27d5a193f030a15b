#include <doctest.h>

#include "s4h/kernels.hpp"
#include "s4h/peak_detector.hpp"
#include "s4h/synth.hpp"
#include "support/matching.hpp"

using namespace s4h;

namespace {

std::vector<std::int64_t> detect_all(const PeakDetectorConfig& cfg, const std::vector<double>& x,
                                     std::size_t block) {
  PeakDetector d(cfg);
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < x.size(); i += block) {
    const auto n = std::min(block, x.size() - i);
    const auto t0 = std::llround(static_cast<double>(i) * 1e9 / cfg.fs_hz);
    auto p = d.detect(std::span(x).subspan(i, n), t0);
    out.insert(out.end(), p.begin(), p.end());
  }
  auto tail = d.flush();
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

}  // namespace

TEST_CASE("clean 60 bpm ECG gives one peak per beat") {
  EcgSimConfig c;
  c.mean_hr_bpm = 60;
  c.rr_jitter_sd_ms = 0;
  c.noise_sd_mv = 0;
  const auto s = synth_ecg(c, 10.0);
  const auto peaks = detect_all({}, s.samples, s.samples.size());
  REQUIRE(peaks.size() == 10);
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    CHECK(std::llabs(peaks[i] - s.true_beat_times_ns[i]) <= 30'000'000);
  }
}

TEST_CASE("all-zero and empty input give no peaks") {
  const std::vector<double> zeros(5000, 0.0);
  CHECK(detect_all({}, zeros, 50).empty());
  PeakDetector d({});
  CHECK(d.detect({}, 0).empty());
  CHECK(d.flush().empty());
}

TEST_CASE("two beats 150 ms apart give one peak") {
  // A quiet lead-in of regular beats trains the threshold, then a pair
  // closer than the refractory period.
  const double fs = 250;
  std::vector<double> beats = {0.5, 1.5, 2.5, 3.5, 4.5, 4.65, 5.9, 6.9};
  std::vector<double> x(static_cast<std::size_t>(8 * fs), 0.0);
  kernels::render_beats_serial(x, 0, fs, beats, kEcgTemplate);
  const auto peaks = detect_all({}, x, x.size());
  std::size_t near_pair = 0;
  for (auto p : peaks) {
    if (p > 4'300'000'000 && p < 4'900'000'000) ++near_pair;
  }
  CHECK(near_pair == 1);
  for (std::size_t i = 1; i < peaks.size(); ++i) CHECK(peaks[i] - peaks[i - 1] >= 200'000'000);
}

TEST_CASE("streaming split does not change peak times") {
  EcgSimConfig c;
  c.rng_seed = 3;
  const auto s = synth_ecg(c, 30.0);
  const auto batch = detect_all({}, s.samples, s.samples.size());
  CHECK(detect_all({}, s.samples, 50) == batch);
  CHECK(detect_all({}, s.samples, 1) == batch);
  CHECK(detect_all({}, s.samples, 777) == batch);
}

TEST_CASE("jittered noisy ECG at several rates and sampling frequencies") {
  for (double hr : {50.0, 60.0, 72.0, 100.0, 140.0}) {
    for (double fs : {130.0, 250.0, 500.0}) {
      CAPTURE(hr);
      CAPTURE(fs);
      EcgSimConfig c;
      c.mean_hr_bpm = hr;
      c.sampling_frequency_hz = fs;
      c.rng_seed = static_cast<std::uint64_t>(hr * 10 + fs);
      const auto s = synth_ecg(c, 60.0);
      PeakDetectorConfig pc;
      pc.fs_hz = fs;
      const auto peaks = detect_all(pc, s.samples, static_cast<std::size_t>(fs / 5));
      const auto m = test::match_beats(s.true_beat_times_ns, peaks, 30'000'000);
      CHECK(m.sensitivity() >= 0.99);
      CHECK(m.false_rate() <= 0.01);
    }
  }
}

TEST_CASE("PPG with the wider integration window") {
  PpgSimConfig c;
  c.mean_hr_bpm = 60;
  c.rr_jitter_sd_ms = 0;
  c.sampling_frequency_hz = 100;
  const auto s = synth_ppg(c, 60.0);
  PeakDetectorConfig pc;
  pc.fs_hz = 100;
  pc.integration_ms = 300;
  const auto peaks = detect_all(pc, s.samples, 20);
  const auto m = test::match_beats(s.true_beat_times_ns, peaks, 50'000'000);
  CHECK(m.sensitivity() >= 0.99);
  CHECK(m.false_rate() <= 0.01);
}

TEST_CASE("threshold is positive once initialized") {
  EcgSimConfig c;
  const auto s = synth_ecg(c, 5.0);
  PeakDetector d({});
  CHECK_FALSE(d.initialized());
  d.detect(std::span(s.samples).first(250), 0);
  CHECK_FALSE(d.initialized());
  d.detect(std::span(s.samples).subspan(250, 500), 1'000'000'000);
  CHECK(d.initialized());
  CHECK(d.threshold() > 0.0);
}
