#pragma once

#include <chrono>
#include <deque>
#include <mutex>
#include <thread>

#include "ideoscale/types.hpp"

namespace ideoscale {

/// Time source for rate limiting and retry backoff. Tests substitute a
/// manual clock so waits cost nothing.
class Clock {
public:
  using duration = std::chrono::nanoseconds;
  using time_point = std::chrono::time_point<std::chrono::steady_clock, duration>;

  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_for(duration d) = 0;
};

class SteadyClock final : public Clock {
public:
  time_point now() override { return std::chrono::time_point_cast<duration>(std::chrono::steady_clock::now()); }
  void sleep_for(duration d) override { std::this_thread::sleep_for(d); }
};

/// Advances only when slept on.
class ManualClock final : public Clock {
public:
  time_point now() override {
    std::lock_guard lock(mutex_);
    return now_;
  }
  void sleep_for(duration d) override {
    std::lock_guard lock(mutex_);
    now_ += d;
    slept_ += d;
  }
  duration total_slept() {
    std::lock_guard lock(mutex_);
    return slept_;
  }

private:
  std::mutex mutex_;
  time_point now_{};
  duration slept_{};
};

/// Sliding-window limiter: at most `per_minute` acquisitions inside any
/// 60-second window. Zero means unlimited. Thread-safe.
class RateLimiter {
public:
  RateLimiter(Clock& clock, unsigned per_minute) : clock_(clock), per_minute_(per_minute) {}

  void acquire() {
    if (per_minute_ == 0) return;
    std::unique_lock lock(mutex_);
    constexpr auto window = std::chrono::minutes(1);
    for (;;) {
      const auto now = clock_.now();
      while (!stamps_.empty() && now - stamps_.front() >= window) stamps_.pop_front();
      if (stamps_.size() < per_minute_) {
        stamps_.push_back(now);
        return;
      }
      const auto wait = stamps_.front() + window - now;
      clock_.sleep_for(wait);
    }
  }

  unsigned per_minute() const noexcept { return per_minute_; }

private:
  Clock& clock_;
  unsigned per_minute_;
  std::mutex mutex_;
  std::deque<Clock::time_point> stamps_;
};

}  // namespace ideoscale
