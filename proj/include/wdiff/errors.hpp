#pragma once

#include <stdexcept>
#include <string>

namespace wdiff {

/// Argument outside an operation's domain (bad sizes, unsorted input, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configuration has a zero spacing where a log-density or energy is
/// requested; the density is singular there.
class DegenerateSpacing : public std::domain_error {
 public:
  explicit DegenerateSpacing(std::size_t spacing_index)
      : std::domain_error("zero spacing at index " + std::to_string(spacing_index) +
                          ": log-density is not finite"),
        index_(spacing_index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Euler step would move a coordinate by more than the unit interval, or the
/// unregularized drift hit a zero spacing.
class StepSizeError : public std::runtime_error {
 public:
  StepSizeError(const std::string& what, double time = 0.0)
      : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// The Gamma-spacing sampler failed to produce a finite draw repeatedly.
class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration file or value; `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace wdiff
