#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace minea {

/// A parameter violates the operation's precondition.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A state carries NaN/Inf coordinates.
class InvalidState : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical blow-up: a state left the finite region or crossed the norm cap.
class BlowUp : public std::runtime_error {
 public:
  BlowUp(std::uint64_t step, double time, std::uint64_t trajectory)
      : std::runtime_error("blow-up at step " + std::to_string(step) +
                           " (t=" + std::to_string(time) + ") in trajectory " +
                           std::to_string(trajectory)),
        step_(step),
        time_(time),
        trajectory_(trajectory) {}

  std::uint64_t step() const noexcept { return step_; }
  double time() const noexcept { return time_; }
  std::uint64_t trajectory() const noexcept { return trajectory_; }

 private:
  std::uint64_t step_;
  double time_;
  std::uint64_t trajectory_;
};

}  // namespace minea
