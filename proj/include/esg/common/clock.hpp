#pragma once

#include <atomic>
#include <cstdint>

namespace esg {

/// Milliseconds on the deployment timeline (simulated or wall clock).
using Millis = std::int64_t;

constexpr Millis kSecond = 1000;
constexpr Millis kMinute = 60 * kSecond;
constexpr Millis kHour = 60 * kMinute;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Millis now() const = 0;
};

/// Test and simulation clock; only moves when told to.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Millis start = 0) : now_(start) {}

  Millis now() const override { return now_.load(); }
  void set(Millis t) { now_.store(t); }
  void advance(Millis dt) { now_.fetch_add(dt); }

 private:
  std::atomic<Millis> now_;
};

class SystemClock final : public Clock {
 public:
  Millis now() const override;
};

}  // namespace esg
