#pragma once

// Harvested-power supply model and instruction-issue throttling.

#include <filesystem>
#include <limits>
#include <utility>
#include <vector>

#include "spinpim/device.hpp"

namespace spinpim {

class PowerError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kNever = std::numeric_limits<double>::infinity();

class PowerTrace {
 public:
  enum class Kind { SquareWave, Explicit };

  /// Continuous power.
  PowerTrace() = default;

  /// On during [k P, k P + duty P) for every integer k >= 0, P = 1 / frequency.
  static PowerTrace square_wave(double frequency_hz, double duty, double on_power_w = 0.0);
  /// Sorted, disjoint [on_start, on_end) intervals; power stays off after the last one.
  static PowerTrace explicit_intervals(std::vector<std::pair<double, double>> intervals, double on_power_w = 0.0);
  /// CSV of `on_start,on_end` rows in seconds; an optional header line is skipped.
  static PowerTrace load_intervals_csv(const std::filesystem::path& path, double on_power_w = 0.0);

  Kind kind() const noexcept { return kind_; }
  double frequency() const noexcept { return frequency_; }
  double duty() const noexcept { return duty_; }
  double on_power() const noexcept { return on_power_; }
  const std::vector<std::pair<double, double>>& intervals() const noexcept { return intervals_; }

  /// True when the trace never switches off.
  bool always_on() const noexcept { return kind_ == Kind::SquareWave && duty_ >= 1.0; }
  bool is_on(double t) const;
  /// First on/off transition strictly after t, or kNever.
  double next_edge(double t) const;
  /// First instant >= t at which power is on, or kNever.
  double next_on(double t) const;
  /// Time with power on inside [t0, t1).
  double on_time(double t0, double t1) const;

 private:
  double period() const { return 1.0 / frequency_; }
  // Square wave start of period k; every caller uses this expression so that
  // edges compare exactly.
  double period_start(long long k) const { return double(k) * period(); }
  double on_end(long long k) const { return period_start(k) + duty_ * period(); }
  long long period_index(double t) const;

  Kind kind_ = Kind::SquareWave;
  double frequency_ = 16e3;
  double duty_ = 1.0;
  double on_power_ = 0.0;
  std::vector<std::pair<double, double>> intervals_;
};

enum class ThrottleMode { Static, PerInstruction };

struct ThrottlePolicy {
  double budget_w = 200e-6;
  ThrottleMode mode = ThrottleMode::Static;
  bool enabled = true;

  void validate() const;
};

/// Issue period of an instruction with the given energy: max(base, energy / budget),
/// or just `base` when throttling is off.
double issue_period(double energy, const ThrottlePolicy& policy, double base_period);

}  // namespace spinpim
