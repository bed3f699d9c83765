#pragma once

#include <atomic>
#include <chrono>

namespace craft {

/// Seconds on some monotonic time line.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() const = 0;
};

class SystemClock final : public Clock {
 public:
  double now() const override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
  }
};

/// Only moves when told to.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(double start = 0.0) : t_(start) {}
  double now() const override { return t_.load(); }
  void advance(double seconds) {
    double cur = t_.load();
    while (!t_.compare_exchange_weak(cur, cur + seconds)) {
    }
  }
  void set(double t) { t_.store(t); }

 private:
  std::atomic<double> t_;
};

}  // namespace craft
