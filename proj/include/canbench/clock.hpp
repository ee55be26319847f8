#pragma once

#include <chrono>

namespace canbench {

/// Monotonic time source. Injected wherever timing matters so tests can
/// substitute a deterministic clock.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now_seconds() const = 0;
};

class SteadyClock final : public Clock {
 public:
  double now_seconds() const override {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  }
};

/// Test clock advanced explicitly.
class FakeClock final : public Clock {
 public:
  explicit FakeClock(double start = 0.0) : now_(start) {}
  double now_seconds() const override { return now_; }
  void advance(double seconds) { now_ += seconds; }

 private:
  double now_;
};

/// Clock that advances a fixed step on every reading, so command-line runs
/// can produce bit-reproducible timing artifacts.
class TickingClock final : public Clock {
 public:
  explicit TickingClock(double step) : step_(step) {}
  double now_seconds() const override {
    now_ += step_;
    return now_;
  }

 private:
  double step_;
  mutable double now_ = 0.0;
};

}  // namespace canbench
