#include "spinpim/power.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>

namespace spinpim {

PowerTrace PowerTrace::square_wave(double frequency_hz, double duty, double on_power_w) {
  if (!(frequency_hz > 0.0)) throw PowerError("frequency must be positive");
  if (!(duty > 0.0 && duty <= 1.0)) throw PowerError(fmt::format("duty {} outside (0, 1]", duty));
  PowerTrace t;
  t.kind_ = Kind::SquareWave;
  t.frequency_ = frequency_hz;
  t.duty_ = duty;
  t.on_power_ = on_power_w;
  return t;
}

PowerTrace PowerTrace::explicit_intervals(std::vector<std::pair<double, double>> intervals, double on_power_w) {
  double prev_end = 0.0;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto [s, e] = intervals[i];
    if (!(s >= 0.0) || !(e > s)) throw PowerError(fmt::format("interval {} is empty or negative", i));
    if (i > 0 && s < prev_end) throw PowerError(fmt::format("interval {} overlaps or is out of order", i));
    prev_end = e;
  }
  PowerTrace t;
  t.kind_ = Kind::Explicit;
  t.intervals_ = std::move(intervals);
  t.on_power_ = on_power_w;
  double on = 0.0;
  for (const auto& [s, e] : t.intervals_) on += e - s;
  t.duty_ = t.intervals_.empty() ? 0.0 : on / t.intervals_.back().second;
  return t;
}

PowerTrace PowerTrace::load_intervals_csv(const std::filesystem::path& path, double on_power_w) {
  std::ifstream f(path);
  if (!f) throw PowerError(fmt::format("cannot open '{}'", path.string()));
  std::vector<std::pair<double, double>> iv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double s = 0, e = 0;
    if (!(ss >> s >> e)) {
      if (line_no == 1) continue;  // header
      throw PowerError(fmt::format("{}:{}: expected on_start,on_end", path.string(), line_no));
    }
    iv.emplace_back(s, e);
  }
  return explicit_intervals(std::move(iv), on_power_w);
}

long long PowerTrace::period_index(double t) const {
  auto k = static_cast<long long>(std::floor(t * frequency_));
  while (period_start(k + 1) <= t) ++k;
  while (k > 0 && period_start(k) > t) --k;
  return k;
}

bool PowerTrace::is_on(double t) const {
  if (kind_ == Kind::Explicit) {
    return std::any_of(intervals_.begin(), intervals_.end(),
                       [t](const auto& iv) { return iv.first <= t && t < iv.second; });
  }
  if (always_on()) return true;
  return t < on_end(period_index(t));
}

double PowerTrace::next_edge(double t) const {
  if (kind_ == Kind::Explicit) {
    for (const auto& [s, e] : intervals_) {
      if (s > t) return s;
      if (e > t) return e;
    }
    return kNever;
  }
  if (always_on()) return kNever;
  const long long k = period_index(t);
  if (t < on_end(k)) return on_end(k);
  return period_start(k + 1);
}

double PowerTrace::next_on(double t) const {
  if (is_on(t)) return t;
  double e = next_edge(t);
  while (e != kNever && !is_on(e)) e = next_edge(e);
  return e;
}

double PowerTrace::on_time(double t0, double t1) const {
  double on = 0.0;
  double t = t0;
  while (t < t1) {
    const double e = std::min(next_edge(t), t1);
    if (is_on(t)) on += e - t;
    t = e;
  }
  return on;
}

void ThrottlePolicy::validate() const {
  if (!(budget_w > 0.0)) throw PowerError("power budget must be positive");
}

double issue_period(double energy, const ThrottlePolicy& policy, double base_period) {
  if (!(base_period > 0.0) || !(energy >= 0.0)) throw PowerError("issue period needs positive costs");
  if (!policy.enabled) return base_period;
  policy.validate();
  return std::max(base_period, energy / policy.budget_w);
}

}  // namespace spinpim
