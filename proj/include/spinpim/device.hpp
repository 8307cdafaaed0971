#pragma once

// MTJ cell model and threshold-logic gate semantics for STT and SHE cells.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace spinpim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DeviceError : public Error {
 public:
  using Error::Error;
};

/// P is the low-resistance state (logic 0), AP the high-resistance state (logic 1).
enum class MtjState : std::uint8_t { P = 0, AP = 1 };

constexpr bool logic_value(MtjState s) noexcept { return s == MtjState::AP; }
constexpr MtjState state_of(bool bit) noexcept { return bit ? MtjState::AP : MtjState::P; }

enum class Technology : std::uint8_t { ModernSTT, FutureSTT, FutureSHE };

std::string_view to_string(Technology t);
Technology parse_technology(std::string_view name);

/// Electrical and timing parameters of one cell technology. SI units throughout.
struct DeviceParams {
  double r_p = 0.0;
  double r_ap = 0.0;
  double t_switch = 0.0;
  double i_switch = 0.0;
  double r_transistor = 1e3;
  double r_she_channel = 0.0;
  Technology technology = Technology::FutureSTT;

  bool is_she() const noexcept { return technology == Technology::FutureSHE; }

  /// Throws DeviceError when an invariant is violated.
  void validate() const;

  static DeviceParams modern_stt();
  static DeviceParams future_stt();
  static DeviceParams future_she();
  /// "modern_stt", "future_stt" or "future_she".
  static DeviceParams preset(std::string_view name);
};

enum class GateName : std::uint8_t { Not, Copy, And, Nand, Or, Nor };

inline constexpr GateName kAllGates[] = {GateName::Not, GateName::Copy, GateName::And,
                                         GateName::Nand, GateName::Or, GateName::Nor};

std::string_view to_string(GateName g);
GateName parse_gate_name(std::string_view name);

enum class SwitchDirection : std::uint8_t { SetOnly, ResetOnly };

/// Static description of a threshold gate.
///
/// The predicate is stored as a truth table indexed by `a | (b << 1)`. Unary
/// gates read their single input on both positions (the ISA mirrors in1 into
/// in2), so only the entries with a == b are meaningful for them.
struct GateKind {
  GateName name = GateName::Nand;
  int arity = 2;
  bool preset = false;
  SwitchDirection direction = SwitchDirection::SetOnly;
  std::uint8_t switch_table = 0;

  /// Value the output moves to when it switches.
  constexpr bool target() const noexcept { return direction == SwitchDirection::SetOnly; }

  constexpr bool switches(bool a, bool b) const noexcept {
    return (switch_table >> (unsigned(a) | (unsigned(b) << 1))) & 1u;
  }
  constexpr bool switches(bool a) const noexcept { return switches(a, a); }

  /// Boolean function of the gate, i.e. the output after a full pulse from the preset.
  constexpr bool evaluate(bool a, bool b) const noexcept { return switches(a, b) ? target() : preset; }
  constexpr bool evaluate(bool a) const noexcept { return evaluate(a, a); }
};

GateKind gate_semantics(GateName name);
GateKind gate_semantics(std::string_view name);

/// Deterministic: a pulse lands only when fully delivered. EarlySwitch: a pulse
/// that delivered at least half its duration is treated as landed; used to
/// explore the "switched before the cut" branch.
enum class CompletionModel : std::uint8_t { Deterministic, EarlySwitch };

constexpr bool pulse_completes(double fraction, CompletionModel model) noexcept {
  return model == CompletionModel::Deterministic ? fraction >= 1.0 : fraction >= 0.5;
}

MtjState apply_gate_stt(std::span<const MtjState> inputs, MtjState output, const GateKind& kind,
                        double pulse_fraction,
                        CompletionModel model = CompletionModel::Deterministic);

MtjState apply_gate_she(std::span<const MtjState> inputs, MtjState output, const GateKind& kind);

struct VoltageWindow {
  double v_min = 0.0;
  double v_max = 0.0;
  bool feasible = false;

  double midpoint() const noexcept { return 0.5 * (v_min + v_max); }
};

/// Series-parallel resistance of the conduction path for one input combination.
/// Inputs are in parallel, in series with the output element and (arity + 1)
/// access transistors. The output element is the MTJ at its preset value for
/// STT and the SHE channel for SHE.
double path_resistance(const GateKind& kind, const DeviceParams& params, bool a, bool b);

VoltageWindow solve_drive_voltage(const GateKind& kind, const DeviceParams& params);

/// Knobs of the latency/energy model that the device table does not fix.
struct CostConfig {
  double v_drive = 0.0;  // 0 selects the midpoint of each gate's window
  double peripheral_share = 0.5;
  double t_setup = 0.5e-9;  // per address presented to a decoder
  double backup_energy_per_bit = -1.0;  // < 0 derives it from the cell write cost
};

enum class OpClass : std::uint8_t { Logic, WriteBit, ReadRow, WriteRow, BackupWrite, Fetch, Activate };

/// Latency of one operation and its energy per unit (per active column for
/// logic and writes, per bit for reads and backup writes, per address for
/// activation, per 64-bit word for fetch). `switch_energy` is the extra
/// per-changed-cell charge of SHE logic.
struct OpCost {
  double latency = 0.0;
  double energy = 0.0;
  double switch_energy = 0.0;
};

OpCost op_cost(OpClass op, const DeviceParams& params, const CostConfig& config,
               GateName gate = GateName::Nand);

}  // namespace spinpim
