#include "s4h/executor.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace s4h {

Executor::TimerId Executor::add_periodic(std::int64_t period_ns, Callback cb) {
  if (period_ns <= 0) throw std::invalid_argument("timer period must be positive");
  std::lock_guard lock(mu_);
  const auto id = next_id_++;
  timers_.emplace(id, Timer{clock_.now_ns() + period_ns, period_ns, std::move(cb)});
  return id;
}

Executor::TimerId Executor::add_oneshot(std::int64_t at_ns, Callback cb) {
  std::lock_guard lock(mu_);
  const auto id = next_id_++;
  timers_.emplace(id, Timer{at_ns, 0, std::move(cb)});
  return id;
}

void Executor::cancel(TimerId id) {
  std::lock_guard lock(mu_);
  timers_.erase(id);
}

std::size_t Executor::timer_count() const {
  std::lock_guard lock(mu_);
  return timers_.size();
}

// Fires the earliest timer if it is due no later than limit_ns. Ties fire in
// registration order so simulated runs are reproducible.
bool Executor::fire_next(std::int64_t limit_ns) {
  TimerId id = 0;
  std::int64_t due = std::numeric_limits<std::int64_t>::max();
  {
    std::lock_guard lock(mu_);
    for (const auto& [tid, t] : timers_) {
      if (t.due_ns < due) {
        due = t.due_ns;
        id = tid;
      }
    }
    if (id == 0 || due > limit_ns) return false;
  }
  clock_.sleep_until(due);
  Callback cb;
  {
    std::lock_guard lock(mu_);
    auto it = timers_.find(id);
    if (it == timers_.end()) return true;  // cancelled while sleeping
    cb = it->second.cb;
    if (it->second.period_ns > 0) {
      it->second.due_ns += it->second.period_ns;
      // A stalled wall clock must not cause a burst of catch-up firings.
      const auto now = clock_.now_ns();
      if (it->second.due_ns < now - it->second.period_ns) it->second.due_ns = now;
    } else {
      timers_.erase(it);
    }
  }
  cb();
  return true;
}

void Executor::run_until(std::int64_t t_ns) {
  while (fire_next(t_ns)) {
  }
  clock_.sleep_until(t_ns);
}

void Executor::spin(std::stop_token stop) {
  constexpr std::int64_t kSlice = 50 * kNsPerMs;
  while (!stop.stop_requested()) {
    if (clock_.is_simulated()) {
      if (timer_count() == 0) return;
      fire_next(std::numeric_limits<std::int64_t>::max());
    } else {
      run_until(clock_.now_ns() + kSlice);
    }
  }
}

}  // namespace s4h
