#include "spinpim/device.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace spinpim {

namespace {

// Truth tables indexed by a | (b << 1): bit set means the output switches.
constexpr std::uint8_t kSwitchUnlessBothOne = 0b0111;
constexpr std::uint8_t kSwitchIfBothZero = 0b0001;

double parallel(double x, double y) { return x * y / (x + y); }

double cell_resistance(const DeviceParams& p, bool bit) { return bit ? p.r_ap : p.r_p; }

double write_energy_per_cell(const DeviceParams& p) {
  const double r = (p.is_she() ? p.r_she_channel : p.r_ap) + p.r_transistor;
  return p.i_switch * p.i_switch * r * p.t_switch;
}

double read_energy_per_bit(const DeviceParams& p) {
  const double i = 0.5 * p.i_switch;
  const double r = p.r_p + p.r_transistor + (p.is_she() ? p.r_she_channel : 0.0);
  return i * i * r * p.t_switch;
}

}  // namespace

std::string_view to_string(Technology t) {
  switch (t) {
    case Technology::ModernSTT: return "ModernSTT";
    case Technology::FutureSTT: return "FutureSTT";
    case Technology::FutureSHE: return "FutureSHE";
  }
  return "?";
}

Technology parse_technology(std::string_view name) {
  if (name == "ModernSTT" || name == "modern_stt") return Technology::ModernSTT;
  if (name == "FutureSTT" || name == "future_stt") return Technology::FutureSTT;
  if (name == "FutureSHE" || name == "future_she") return Technology::FutureSHE;
  throw DeviceError(fmt::format("unknown technology '{}'", name));
}

void DeviceParams::validate() const {
  if (!(r_p > 0.0)) throw DeviceError("r_p must be positive");
  if (!(r_ap >= r_p)) throw DeviceError("r_ap must not be below r_p");
  if (!(t_switch > 0.0)) throw DeviceError("t_switch must be positive");
  if (!(i_switch > 0.0)) throw DeviceError("i_switch must be positive");
  if (!(r_transistor >= 0.0)) throw DeviceError("r_transistor must be non-negative");
  if (is_she() && !(r_she_channel > 0.0)) throw DeviceError("SHE cells need a positive r_she_channel");
}

DeviceParams DeviceParams::modern_stt() {
  return {.r_p = 3.15e3, .r_ap = 7.34e3, .t_switch = 3e-9, .i_switch = 40e-6,
          .r_transistor = 1e3, .r_she_channel = 0.0, .technology = Technology::ModernSTT};
}

DeviceParams DeviceParams::future_stt() {
  return {.r_p = 7.34e3, .r_ap = 76.39e3, .t_switch = 1e-9, .i_switch = 3e-6,
          .r_transistor = 1e3, .r_she_channel = 0.0, .technology = Technology::FutureSTT};
}

DeviceParams DeviceParams::future_she() {
  DeviceParams p = future_stt();
  p.technology = Technology::FutureSHE;
  p.r_she_channel = 1e3;
  return p;
}

DeviceParams DeviceParams::preset(std::string_view name) {
  if (name == "modern_stt") return modern_stt();
  if (name == "future_stt") return future_stt();
  if (name == "future_she") return future_she();
  throw DeviceError(fmt::format("unknown device preset '{}'", name));
}

std::string_view to_string(GateName g) {
  switch (g) {
    case GateName::Not: return "NOT";
    case GateName::Copy: return "COPY";
    case GateName::And: return "AND";
    case GateName::Nand: return "NAND";
    case GateName::Or: return "OR";
    case GateName::Nor: return "NOR";
  }
  return "?";
}

GateName parse_gate_name(std::string_view name) {
  for (GateName g : kAllGates) {
    if (to_string(g) == name) return g;
  }
  throw DeviceError(fmt::format("unknown gate '{}'", name));
}

GateKind gate_semantics(GateName name) {
  using enum SwitchDirection;
  switch (name) {
    case GateName::Nand: return {name, 2, false, SetOnly, kSwitchUnlessBothOne};
    case GateName::And: return {name, 2, true, ResetOnly, kSwitchUnlessBothOne};
    case GateName::Or: return {name, 2, true, ResetOnly, kSwitchIfBothZero};
    case GateName::Nor: return {name, 2, false, SetOnly, kSwitchIfBothZero};
    case GateName::Not: return {name, 1, false, SetOnly, kSwitchIfBothZero};
    case GateName::Copy: return {name, 1, true, ResetOnly, kSwitchIfBothZero};
  }
  throw DeviceError("unknown gate");
}

GateKind gate_semantics(std::string_view name) { return gate_semantics(parse_gate_name(name)); }

namespace {

void check_arity(std::span<const MtjState> inputs, const GateKind& kind) {
  if (static_cast<int>(inputs.size()) != kind.arity) {
    throw DeviceError(fmt::format("{} takes {} input(s), got {}", to_string(kind.name), kind.arity,
                                  inputs.size()));
  }
}

bool first(std::span<const MtjState> in) { return logic_value(in[0]); }
bool second(std::span<const MtjState> in) { return logic_value(in[in.size() - 1]); }

}  // namespace

MtjState apply_gate_stt(std::span<const MtjState> inputs, MtjState output, const GateKind& kind,
                        double pulse_fraction, CompletionModel model) {
  check_arity(inputs, kind);
  if (!kind.switches(first(inputs), second(inputs))) return output;
  if (!pulse_completes(pulse_fraction, model)) return output;
  return state_of(kind.target());
}

MtjState apply_gate_she(std::span<const MtjState> inputs, MtjState output, const GateKind& kind) {
  check_arity(inputs, kind);
  (void)output;
  return state_of(kind.evaluate(first(inputs), second(inputs)));
}

double path_resistance(const GateKind& kind, const DeviceParams& p, bool a, bool b) {
  const double channel = p.is_she() ? p.r_she_channel : 0.0;
  const double ra = cell_resistance(p, a) + channel;
  const double inputs = kind.arity == 1 ? ra : parallel(ra, cell_resistance(p, b) + channel);
  const double out = p.is_she() ? p.r_she_channel : cell_resistance(p, kind.preset);
  return inputs + out + (kind.arity + 1) * p.r_transistor;
}

VoltageWindow solve_drive_voltage(const GateKind& kind, const DeviceParams& params) {
  params.validate();
  double worst_switch = 0.0;
  double best_hold = std::numeric_limits<double>::infinity();
  for (unsigned combo = 0; combo < 4; ++combo) {
    const bool a = combo & 1u;
    const bool b = kind.arity == 1 ? a : bool(combo & 2u);
    if (kind.arity == 1 && (combo & 2u)) continue;
    const double r = path_resistance(kind, params, a, b);
    if (kind.switches(a, b)) {
      worst_switch = std::max(worst_switch, r);
    } else {
      best_hold = std::min(best_hold, r);
    }
  }
  VoltageWindow w;
  w.v_min = params.i_switch * worst_switch;
  w.v_max = params.i_switch * best_hold;
  w.feasible = w.v_min < w.v_max;
  return w;
}

OpCost op_cost(OpClass op, const DeviceParams& params, const CostConfig& config, GateName gate) {
  params.validate();
  if (!(config.peripheral_share >= 0.0 && config.peripheral_share < 1.0)) {
    throw DeviceError("peripheral_share must lie in [0, 1)");
  }
  const double scale = 1.0 / (1.0 - config.peripheral_share);
  const double t = params.t_switch;
  const double setup = config.t_setup;
  OpCost c;
  switch (op) {
    case OpClass::Logic: {
      const GateKind kind = gate_semantics(gate);
      const VoltageWindow w = solve_drive_voltage(kind, params);
      if (!w.feasible) {
        throw DeviceError(fmt::format("{} has no feasible drive voltage", to_string(gate)));
      }
      const double v = config.v_drive > 0.0 ? config.v_drive : w.midpoint();
      const double r_worst = w.v_min / params.i_switch;
      c.latency = t + (kind.arity + 1) * setup;
      c.energy = v * v * t / r_worst;
      if (params.is_she()) {
        c.switch_energy = params.i_switch * params.i_switch * params.r_she_channel * t;
      }
      break;
    }
    case OpClass::WriteBit:
    case OpClass::WriteRow:
      c.latency = t + setup;
      c.energy = write_energy_per_cell(params);
      break;
    case OpClass::ReadRow:
      c.latency = t + setup;
      c.energy = read_energy_per_bit(params);
      break;
    case OpClass::Fetch:
      c.latency = t + setup;
      c.energy = 64.0 * read_energy_per_bit(params);
      break;
    case OpClass::BackupWrite:
      c.latency = t;
      if (config.backup_energy_per_bit >= 0.0) {
        c.energy = config.backup_energy_per_bit;  // already a total
        return c;
      }
      c.energy = write_energy_per_cell(params);
      break;
    case OpClass::Activate:
      c.latency = t + 5 * setup;
      c.energy = 10.0 * write_energy_per_cell(params);
      break;
  }
  c.energy *= scale;
  c.switch_energy *= scale;
  return c;
}

}  // namespace spinpim
