#include "spinpim/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

namespace spinpim {

namespace {

constexpr double kMicro = 1e6;

bool close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-30});
}

}  // namespace

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Productive: return "Productive";
    case Category::Backup: return "Backup";
    case Category::Dead: return "Dead";
    case Category::Restore: return "Restore";
  }
  return "?";
}

void EnergyLedger::charge(Category category, double energy, double time) {
  if (!(energy >= 0.0) || !(time >= 0.0)) {
    throw MetricsError(fmt::format("negative charge ({} J, {} s) to {}", energy, time, to_string(category)));
  }
  total_e += energy;
  total_t += time;
  on_t += time;
  switch (category) {
    case Category::Productive: productive_e += energy; break;
    case Category::Backup: backup_e += energy; break;
    case Category::Dead: dead_e += energy; break;
    case Category::Restore:
      restore_e += energy;
      restore_t += time;
      break;
  }
}

void EnergyLedger::idle(double dt, bool powered) {
  if (!(dt >= 0.0)) throw MetricsError(fmt::format("negative idle time {}", dt));
  total_t += dt;
  if (powered) on_t += dt;
}

EnergyLedger& EnergyLedger::operator+=(const EnergyLedger& o) {
  total_t += o.total_t;
  restore_t += o.restore_t;
  on_t += o.on_t;
  total_e += o.total_e;
  productive_e += o.productive_e;
  backup_e += o.backup_e;
  dead_e += o.dead_e;
  restore_e += o.restore_e;
  instructions += o.instructions;
  reexecuted += o.reexecuted;
  restarts += o.restarts;
  return *this;
}

bool EnergyLedger::consistent(double rel_tol) const {
  for (double v : {total_t, restore_t, on_t, total_e, productive_e, backup_e, dead_e, restore_e}) {
    if (!(v >= 0.0)) return false;
  }
  if (restore_t > total_t || on_t > total_t * (1 + rel_tol)) return false;
  return close(total_e, productive_e + backup_e + dead_e + restore_e, rel_tol);
}

std::string csv_header() { return "Duty,TotalT,RestoreT,TotalE,BackupE,DeadE,RestoreE"; }

std::string csv_row(double duty, const EnergyLedger& l) {
  return fmt::format("{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}", duty, l.total_t * kMicro,
                     l.restore_t * kMicro, l.total_e * kMicro, l.backup_e * kMicro, l.dead_e * kMicro,
                     l.restore_e * kMicro);
}

std::string to_json(double duty, const EnergyLedger& l) {
  nlohmann::ordered_json j;
  j["Duty"] = duty;
  j["TotalT"] = l.total_t * kMicro;
  j["RestoreT"] = l.restore_t * kMicro;
  j["TotalE"] = l.total_e * kMicro;
  j["BackupE"] = l.backup_e * kMicro;
  j["DeadE"] = l.dead_e * kMicro;
  j["RestoreE"] = l.restore_e * kMicro;
  j["ProductiveE"] = l.productive_e * kMicro;
  j["OnT"] = l.on_t * kMicro;
  j["Instructions"] = l.instructions;
  j["Reexecuted"] = l.reexecuted;
  j["Restarts"] = l.restarts;
  return j.dump(2);
}

}  // namespace spinpim
