#pragma once

#include <chrono>

namespace agora {

// Time base for one decision loop: virtual in simulation, wall time live.
class Clock {
public:
  virtual ~Clock() = default;
  virtual double now() const = 0;
  // Accounts for `seconds` of engine/tool work. Virtual clocks move forward;
  // a wall clock has already moved.
  virtual void elapse(double seconds) = 0;
  // Marks the inference host busy (drives the simulated accelerator power).
  virtual void set_inference_active(bool) {}
};

class WallClock final : public Clock {
public:
  double now() const override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
  }
  void elapse(double) override {}

private:
  std::chrono::steady_clock::time_point origin_ = std::chrono::steady_clock::now();
};

class InferenceScope {
public:
  explicit InferenceScope(Clock& clock) : clock_(clock) { clock_.set_inference_active(true); }
  ~InferenceScope() { clock_.set_inference_active(false); }
  InferenceScope(const InferenceScope&) = delete;
  InferenceScope& operator=(const InferenceScope&) = delete;

private:
  Clock& clock_;
};

}  // namespace agora
