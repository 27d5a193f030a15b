#include "s4h/clock.hpp"

#include <chrono>
#include <thread>

namespace s4h {

std::int64_t SystemClock::now_ns() const {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void SystemClock::sleep_until(std::int64_t t_ns) {
  const auto delta = t_ns - now_ns();
  if (delta > 0) std::this_thread::sleep_for(std::chrono::nanoseconds(delta));
}

void SimulatedClock::sleep_until(std::int64_t t_ns) {
  auto cur = now_.load();
  while (t_ns > cur && !now_.compare_exchange_weak(cur, t_ns)) {
  }
}

}  // namespace s4h
