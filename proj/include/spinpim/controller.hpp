#pragma once

// Memory controller: fetch, broadcast, and the crash-consistent backup
// protocol (duplicated PC, parity bit, stored activation register), driven
// under a power trace.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spinpim/array.hpp"
#include "spinpim/device.hpp"
#include "spinpim/isa.hpp"
#include "spinpim/metrics.hpp"
#include "spinpim/power.hpp"

namespace spinpim {

class ControllerError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::size_t kWordsPerInstrTile = kTileRows * kWordsPerRow;
inline constexpr unsigned kPcBits = 32;

/// Program storage: 16 instructions per 1024-bit row, word slot i of a row is
/// its i-th 64-bit word.
class InstructionMemory {
 public:
  explicit InstructionMemory(std::span<const Word64> words);
  static std::shared_ptr<const InstructionMemory> from_program(std::span<const Instruction> program);

  std::size_t size() const noexcept { return size_; }
  /// Throws ControllerError when pc is outside the loaded program.
  Word64 fetch(std::uint32_t pc) const;
  const std::vector<Tile>& tiles() const noexcept { return tiles_; }

 private:
  std::vector<Tile> tiles_;
  std::size_t size_ = 0;
};

enum class Phase : std::uint8_t { Fetch, Broadcast, StoreAct, WritePC, FlipParity };

std::string_view to_string(Phase p);
Phase parse_phase(std::string_view name);

/// StoreActFirst backs up an activation before the PC so that a cut never
/// leaves a committed PC with a stale stored_act. StoreActLast keeps the
/// activation store after the parity flip and is unsafe; it exists so that
/// the crash sweep can demonstrate the hazard.
enum class PhaseOrder : std::uint8_t { StoreActFirst, StoreActLast };

/// DuplicatedPc is the real protocol. SinglePc overwrites the one PC register
/// in place without a parity bit; an ablation for negative tests.
enum class BackupScheme : std::uint8_t { DuplicatedPc, SinglePc };

/// Interruptible phases of one instruction in execution order.
std::vector<Phase> phases_for(const Instruction& instr, PhaseOrder order = PhaseOrder::StoreActFirst,
                              BackupScheme scheme = BackupScheme::DuplicatedPc);

struct ArchState {
  std::uint32_t pc_a = 0;
  std::uint32_t pc_b = 0;
  bool parity = false;  // false: pc_a is valid
  Word64 stored_act = kHaltWord;  // HALT encodes "none"

  std::uint32_t valid_pc() const noexcept { return parity ? pc_b : pc_a; }
  friend bool operator==(const ArchState&, const ArchState&) = default;
};

struct Machine {
  CellVariant variant = CellVariant::STT;
  std::vector<Tile> tiles;
  std::shared_ptr<const InstructionMemory> program;
  ArchState arch;
  RowBuffer buffer;  // non-volatile
  bool halted = false;

  static Machine create(std::shared_ptr<const InstructionMemory> program, std::size_t data_tiles,
                        CellVariant variant = CellVariant::STT);

  bool same_data(const Machine& other) const;
  std::optional<CellAddress> first_difference(const Machine& other) const;
  /// ArchState, buffer, then every data tile snapshot; little-endian.
  std::vector<std::uint8_t> snapshot() const;
};

/// A single injected cut: power drops while `phase` of the first execution of
/// the instruction at `instruction` has delivered `fraction` of its duration.
/// Fraction 0 cuts at the phase start; fraction 1 right after it.
struct CutSpec {
  std::uint32_t instruction = 0;
  Phase phase = Phase::Fetch;
  double fraction = 0.0;

  friend bool operator==(const CutSpec&, const CutSpec&) = default;
};

std::string to_string(const CutSpec& cut);

struct RunOptions {
  PowerTrace trace;
  ThrottlePolicy throttle;
  CompletionModel completion = CompletionModel::Deterministic;
  PhaseOrder order = PhaseOrder::StoreActFirst;
  BackupScheme scheme = BackupScheme::DuplicatedPc;
  /// Fault when a first attempt of an STT gate finds its output off preset;
  /// re-executions legitimately see the switched value.
  bool strict_preset = false;
  double max_time = 60.0;  // simulated seconds
  std::optional<CutSpec> cut;
  double outage = 1e-6;  // off time of an injected cut on continuous power
};

enum class RunStatus : std::uint8_t { Halted, Timeout, Fault };

std::string_view to_string(RunStatus s);

struct RunResult {
  Machine machine;
  EnergyLedger ledger;
  RunStatus status = RunStatus::Halted;
  std::string message;
  /// Every instruction attempt that made progress, counting re-executions.
  std::uint64_t attempts = 0;
  bool cut_fired = false;
  /// Row buffer contents captured by each READROW, keyed by its PC.
  std::map<std::uint32_t, RowBuffer> readouts;
};

/// Per-PC issue periods and energy bounds derived by a static scan of the program.
struct IssueSchedule {
  double base_period = 0.0;
  std::vector<double> energy_bound;  // per PC
  std::vector<double> period;        // per PC
  double restore_energy_bound = 0.0;
  double restore_period = 0.0;
  double max_energy_bound = 0.0;
};

class Simulator {
 public:
  Simulator(DeviceParams device, CostConfig cost = {});

  const DeviceParams& device() const noexcept { return device_; }
  const CostConfig& cost() const noexcept { return cost_; }

  /// Worst-case fetch + operation + backup latency over the ISA.
  double base_period() const;
  IssueSchedule schedule(const InstructionMemory& program, const ThrottlePolicy& policy,
                         BackupScheme scheme = BackupScheme::DuplicatedPc) const;

  RunResult run(Machine machine, const RunOptions& options) const;

  /// Per-operation costs for this device; internal to the controller.
  struct Costs;

 private:
  DeviceParams device_;
  CostConfig cost_;
  std::shared_ptr<const Costs> costs_;
};

}  // namespace spinpim
