#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>

namespace logbench {

// Admits at most `per_window` acquisitions in any sliding window. Clock and
// sleep are injectable so tests can drive time by hand.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;
  using NowFn = std::function<Clock::time_point()>;
  using SleepFn = std::function<void(Clock::duration)>;

  explicit RateLimiter(std::size_t per_window, Clock::duration window = std::chrono::minutes(1),
                       NowFn now = [] { return Clock::now(); },
                       SleepFn sleep = [](Clock::duration d) { std::this_thread::sleep_for(d); })
      : per_window_(per_window == 0 ? 1 : per_window), window_(window), now_(std::move(now)), sleep_(std::move(sleep)) {}

  // Blocks until a slot is free, then records the admission time.
  void acquire() {
    std::unique_lock lock(mu_);
    for (;;) {
      auto now = now_();
      while (!admitted_.empty() && now - admitted_.front() >= window_) admitted_.pop_front();
      if (admitted_.size() < per_window_) {
        admitted_.push_back(now);
        return;
      }
      auto wait = admitted_.front() + window_ - now;
      lock.unlock();
      sleep_(wait);
      lock.lock();
    }
  }

  std::size_t per_window() const noexcept { return per_window_; }

 private:
  std::size_t per_window_;
  Clock::duration window_;
  NowFn now_;
  SleepFn sleep_;
  std::mutex mu_;
  std::deque<Clock::time_point> admitted_;
};

}  // namespace logbench
