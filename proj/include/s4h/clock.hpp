#pragma once

#include <atomic>
#include <cstdint>

namespace s4h {

inline constexpr std::int64_t kNsPerMs = 1'000'000;
inline constexpr std::int64_t kNsPerSec = 1'000'000'000;

// Source of bus time. The system clock sleeps for real; the simulated clock
// jumps, so whole pipelines can run faster than real time.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ns() const = 0;
  virtual void sleep_until(std::int64_t t_ns) = 0;
  virtual bool is_simulated() const { return false; }
};

class SystemClock final : public Clock {
 public:
  std::int64_t now_ns() const override;
  void sleep_until(std::int64_t t_ns) override;
};

class SimulatedClock final : public Clock {
 public:
  explicit SimulatedClock(std::int64_t start_ns = 1'700'000'000 * kNsPerSec) : now_(start_ns) {}

  std::int64_t now_ns() const override { return now_.load(); }
  // Advances time; never moves backwards.
  void sleep_until(std::int64_t t_ns) override;
  bool is_simulated() const override { return true; }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace s4h
