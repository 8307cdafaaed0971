#pragma once

// Time and energy ledger split into the intermittent-computing categories.

#include <cstdint>
#include <string>
#include <string_view>

#include "spinpim/device.hpp"

namespace spinpim {

class MetricsError : public Error {
 public:
  using Error::Error;
};

enum class Category : std::uint8_t { Productive, Backup, Dead, Restore };

std::string_view to_string(Category c);

/// Seconds and joules internally; reports convert to microseconds and microjoules.
struct EnergyLedger {
  double total_t = 0.0;
  double restore_t = 0.0;
  double on_t = 0.0;  // time with power available, busy or idle
  double total_e = 0.0;
  double productive_e = 0.0;
  double backup_e = 0.0;
  double dead_e = 0.0;
  double restore_e = 0.0;
  std::uint64_t instructions = 0;
  std::uint64_t reexecuted = 0;
  std::uint64_t restarts = 0;

  /// Busy time spent with power on. Throws on negative amounts.
  void charge(Category category, double energy, double time);
  /// Time that passes without energy, powered or not.
  void idle(double dt, bool powered);

  EnergyLedger& operator+=(const EnergyLedger& other);

  /// total_e equals the sum of the categories (relative tolerance), all fields
  /// are non-negative, restore_t <= total_t.
  bool consistent(double rel_tol = 1e-9) const;
  double average_on_power() const { return on_t > 0 ? total_e / on_t : 0.0; }
};

std::string csv_header();
/// One CSV row in µs / µJ for the given duty label.
std::string csv_row(double duty, const EnergyLedger& ledger);
/// JSON object with the report columns plus counts, fixed key order.
std::string to_json(double duty, const EnergyLedger& ledger);

}  // namespace spinpim
