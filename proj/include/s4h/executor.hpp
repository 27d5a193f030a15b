#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <stop_token>

#include "s4h/clock.hpp"

namespace s4h {

// Single-threaded timer loop. Node tasks register periodic or one-shot
// timers; the loop fires them in deadline order using the given clock.
class Executor {
 public:
  using TimerId = std::uint64_t;
  using Callback = std::function<void()>;

  explicit Executor(Clock& clock) : clock_(clock) {}
  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;

  Clock& clock() { return clock_; }

  // First firing at now + period. period must be > 0.
  TimerId add_periodic(std::int64_t period_ns, Callback cb);
  TimerId add_oneshot(std::int64_t at_ns, Callback cb);
  void cancel(TimerId id);
  std::size_t timer_count() const;

  // Fires every timer due at or before t_ns, then leaves the clock at t_ns.
  void run_until(std::int64_t t_ns);
  void run_for(std::int64_t duration_ns) { run_until(clock_.now_ns() + duration_ns); }
  // Runs until stop is requested (or no timers remain on a simulated clock).
  void spin(std::stop_token stop);

 private:
  struct Timer {
    std::int64_t due_ns;
    std::int64_t period_ns;  // 0 for one-shot
    Callback cb;
  };

  bool fire_next(std::int64_t limit_ns);

  Clock& clock_;
  mutable std::mutex mu_;
  std::map<TimerId, Timer> timers_;
  TimerId next_id_ = 1;
};

}  // namespace s4h
