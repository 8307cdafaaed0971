#include "spinpim/controller.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

namespace spinpim {

namespace {

constexpr unsigned kParityBits = 1;
constexpr unsigned kActBits = 64;

template <class... Fs>
struct Overload : Fs... {
  using Fs::operator()...;
};

std::size_t gate_index(GateName g) { return static_cast<std::size_t>(g); }

void append_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int k = 0; k < bytes; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

}  // namespace

InstructionMemory::InstructionMemory(std::span<const Word64> words) : size_(words.size()) {
  const std::size_t n_tiles = std::max<std::size_t>(1, (words.size() + kWordsPerInstrTile - 1) / kWordsPerInstrTile);
  tiles_.assign(n_tiles, Tile());
  for (std::size_t t = 0; t < n_tiles; ++t) {
    for (std::size_t row = 0; row < kTileRows; ++row) {
      const std::size_t base = t * kWordsPerInstrTile + row * kWordsPerRow;
      if (base >= words.size()) break;
      RowBits bits{};
      for (std::size_t k = 0; k < kWordsPerRow && base + k < words.size(); ++k) bits[k] = words[base + k].bits;
      tiles_[t].load_row(row, bits);
    }
  }
}

std::shared_ptr<const InstructionMemory> InstructionMemory::from_program(std::span<const Instruction> program) {
  const auto words = encode_program(program);
  return std::make_shared<const InstructionMemory>(words);
}

Word64 InstructionMemory::fetch(std::uint32_t pc) const {
  if (pc >= size_) throw ControllerError(fmt::format("PC {} outside the {}-word program", pc, size_));
  const std::size_t tile = pc / kWordsPerInstrTile;
  const std::size_t row = (pc % kWordsPerInstrTile) / kWordsPerRow;
  return Word64{tiles_[tile].row_bits(row)[pc % kWordsPerRow]};
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Fetch: return "Fetch";
    case Phase::Broadcast: return "Broadcast";
    case Phase::StoreAct: return "StoreAct";
    case Phase::WritePC: return "WritePC";
    case Phase::FlipParity: return "FlipParity";
  }
  return "?";
}

Phase parse_phase(std::string_view name) {
  for (Phase p : {Phase::Fetch, Phase::Broadcast, Phase::StoreAct, Phase::WritePC, Phase::FlipParity}) {
    if (to_string(p) == name) return p;
  }
  throw ControllerError(fmt::format("unknown phase '{}'", name));
}

std::vector<Phase> phases_for(const Instruction& instr, PhaseOrder order, BackupScheme scheme) {
  if (std::holds_alternative<HaltInstr>(instr)) return {Phase::Fetch};
  std::vector<Phase> p{Phase::Fetch, Phase::Broadcast};
  const bool act = is_activation(instr);
  if (act && order == PhaseOrder::StoreActFirst) p.push_back(Phase::StoreAct);
  p.push_back(Phase::WritePC);
  if (scheme == BackupScheme::DuplicatedPc) p.push_back(Phase::FlipParity);
  if (act && order == PhaseOrder::StoreActLast) p.push_back(Phase::StoreAct);
  return p;
}

std::string to_string(const CutSpec& cut) {
  return fmt::format("instr {} {} @ {:.2f}", cut.instruction, to_string(cut.phase), cut.fraction);
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Halted: return "Halted";
    case RunStatus::Timeout: return "Timeout";
    case RunStatus::Fault: return "Fault";
  }
  return "?";
}

Machine Machine::create(std::shared_ptr<const InstructionMemory> program, std::size_t data_tiles,
                        CellVariant variant) {
  if (data_tiles == 0 || data_tiles > kMaxDataTiles) {
    throw ControllerError(fmt::format("data tile count {} outside [1, {}]", data_tiles, kMaxDataTiles));
  }
  Machine m;
  m.variant = variant;
  m.tiles.assign(data_tiles, Tile(variant));
  m.program = std::move(program);
  return m;
}

bool Machine::same_data(const Machine& other) const {
  if (tiles.size() != other.tiles.size()) return false;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    if (!tiles[i].same_cells(other.tiles[i])) return false;
  }
  return true;
}

std::optional<CellAddress> Machine::first_difference(const Machine& other) const {
  const std::size_t n = std::min(tiles.size(), other.tiles.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto d = tiles[i].first_difference(other.tiles[i])) {
      return CellAddress{static_cast<std::uint16_t>(i), d->first, d->second};
    }
  }
  if (tiles.size() != other.tiles.size()) return CellAddress{static_cast<std::uint16_t>(n), 0, 0};
  return std::nullopt;
}

std::vector<std::uint8_t> Machine::snapshot() const {
  std::vector<std::uint8_t> out;
  append_le(out, arch.pc_a, 4);
  append_le(out, arch.pc_b, 4);
  append_le(out, arch.parity ? 1 : 0, 1);
  append_le(out, arch.stored_act.bits, 8);
  for (auto w : buffer.bits) append_le(out, w, 8);
  for (const auto& t : tiles) {
    const auto s = t.snapshot();
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

struct Simulator::Costs {
  OpCost fetch;
  OpCost read;
  OpCost write;
  OpCost backup;
  OpCost activate;
  std::array<std::optional<OpCost>, 6> logic;

  const OpCost& gate(GateName g) const {
    const auto& c = logic[gate_index(g)];
    if (!c) throw ControllerError(fmt::format("{} has no feasible drive voltage on this device", to_string(g)));
    return *c;
  }

  double broadcast_latency(const Instruction& instr) const {
    return std::visit(Overload{
                          [&](const LogicInstr& i) { return gate(i.gate).latency; },
                          [&](const WriteBitInstr&) { return write.latency; },
                          [&](const WriteRowInstr&) { return write.latency; },
                          [&](const ReadRowInstr&) { return read.latency; },
                          [&](const ActivateColumnsInstr&) { return activate.latency; },
                          [&](const ActivateRangeInstr&) { return activate.latency; },
                          [&](const HaltInstr&) { return 0.0; },
                      },
                      instr);
  }

  /// Broadcast energy with `active` latched columns, excluding SHE switching events.
  double broadcast_energy(const Instruction& instr, std::size_t active) const {
    return std::visit(Overload{
                          [&](const LogicInstr& i) { return double(active) * gate(i.gate).energy; },
                          [&](const WriteBitInstr&) { return double(active) * write.energy; },
                          [&](const WriteRowInstr&) { return double(active) * write.energy; },
                          [&](const ReadRowInstr&) { return double(kTileCols) * read.energy; },
                          [&](const ActivateColumnsInstr& i) { return double(i.cols.size()) * activate.energy; },
                          [&](const ActivateRangeInstr&) { return 2.0 * activate.energy; },
                          [&](const HaltInstr&) { return 0.0; },
                      },
                      instr);
  }

  double phase_latency(Phase p, const Instruction& instr) const {
    switch (p) {
      case Phase::Fetch: return fetch.latency;
      case Phase::Broadcast: return broadcast_latency(instr);
      default: return backup.latency;
    }
  }

  double backup_energy(Phase p) const {
    switch (p) {
      case Phase::StoreAct: return kActBits * backup.energy;
      case Phase::WritePC: return kPcBits * backup.energy;
      case Phase::FlipParity: return kParityBits * backup.energy;
      default: return 0.0;
    }
  }
};

Simulator::Simulator(DeviceParams device, CostConfig cost) : device_(device), cost_(cost) {
  device_.validate();
  auto c = std::make_shared<Costs>();
  c->fetch = op_cost(OpClass::Fetch, device_, cost_);
  c->read = op_cost(OpClass::ReadRow, device_, cost_);
  c->write = op_cost(OpClass::WriteBit, device_, cost_);
  c->backup = op_cost(OpClass::BackupWrite, device_, cost_);
  c->activate = op_cost(OpClass::Activate, device_, cost_);
  for (GateName g : kAllGates) {
    if (solve_drive_voltage(gate_semantics(g), device_).feasible) {
      c->logic[gate_index(g)] = op_cost(OpClass::Logic, device_, cost_, g);
    }
  }
  costs_ = std::move(c);
}

double Simulator::base_period() const {
  const Costs& c = *costs_;
  double op = std::max({c.write.latency, c.read.latency, c.activate.latency});
  for (const auto& g : c.logic) {
    if (g) op = std::max(op, g->latency);
  }
  return c.fetch.latency + op + 3 * c.backup.latency;
}

IssueSchedule Simulator::schedule(const InstructionMemory& program, const ThrottlePolicy& policy,
                                  BackupScheme scheme) const {
  const Costs& c = *costs_;
  IssueSchedule s;
  s.base_period = base_period();
  s.energy_bound.resize(program.size());
  std::vector<std::size_t> active(kMaxDataTiles, 0);
  double max_act = 0.0;
  for (std::uint32_t pc = 0; pc < program.size(); ++pc) {
    double e = c.fetch.energy;
    if (const auto instr = try_decode(program.fetch(pc))) {
      const auto tile = tile_of(*instr);
      const std::size_t n = tile ? active[*tile] : 0;
      if (const auto* l = std::get_if<LogicInstr>(&*instr)) {
        const auto& g = c.logic[gate_index(l->gate)];
        if (g) e += double(n) * (g->energy + g->switch_energy);
      } else {
        e += c.broadcast_energy(*instr, n);
      }
      if (!std::holds_alternative<HaltInstr>(*instr)) {
        e += c.backup_energy(Phase::WritePC);
        if (scheme == BackupScheme::DuplicatedPc) e += c.backup_energy(Phase::FlipParity);
      }
      if (is_activation(*instr)) {
        e += c.backup_energy(Phase::StoreAct);
        max_act = std::max(max_act, c.broadcast_energy(*instr, 0));
        if (const auto* a = std::get_if<ActivateColumnsInstr>(&*instr)) active[*tile] = a->cols.size();
        if (const auto* a = std::get_if<ActivateRangeInstr>(&*instr)) active[*tile] = a->end - a->start + 1u;
      }
    }
    s.energy_bound[pc] = e;
    s.max_energy_bound = std::max(s.max_energy_bound, e);
  }
  s.restore_energy_bound = double(kPcBits + kParityBits + kActBits) * c.read.energy + max_act;

  const double worst = std::max(s.max_energy_bound, s.restore_energy_bound);
  s.period.resize(program.size());
  for (std::size_t pc = 0; pc < program.size(); ++pc) {
    const double e = policy.mode == ThrottleMode::Static ? worst : s.energy_bound[pc];
    s.period[pc] = issue_period(e, policy, s.base_period);
  }
  s.restore_period = issue_period(policy.mode == ThrottleMode::Static ? worst : s.restore_energy_bound, policy,
                                  s.base_period);
  return s;
}

namespace {

/// Mutable state of one run; the loop below is the whole controller.
class Run {
 public:
  Run(const Simulator& sim, const Simulator::Costs& costs, Machine machine, const RunOptions& opt)
      : sim_(sim), c_(costs), opt_(opt), trace_(opt.trace) {
    r_.machine = std::move(machine);
    cut_armed_ = opt.cut.has_value();
  }

  RunResult execute() {
    Machine& m = r_.machine;
    if (!m.program) throw ControllerError("machine has no program loaded");
    const IssueSchedule sched = sim_.schedule(*m.program, opt_.throttle, opt_.scheme);

    if (!trace_.is_on(0.0)) {
      const double on = trace_.next_on(0.0);
      if (on == kNever) return finish(RunStatus::Timeout, "power never turns on");
      r_.ledger.idle(on, false);
      t_ = on;
    }
    try {
      while (!m.halted) {
        if (t_ > opt_.max_time) {
          return finish(RunStatus::Timeout, fmt::format("no HALT within {} s of simulated time", opt_.max_time));
        }
        if (!trace_.is_on(t_)) {
          if (!power_off(t_, false)) return finish(RunStatus::Timeout, "power never returns");
          continue;
        }
        const double off_edge = trace_.next_edge(t_);
        const bool ok = need_restore_ ? restore(sched, off_edge) : step(sched, off_edge);
        if (!ok) return finish(RunStatus::Timeout, "power never returns");
      }
    } catch (const Error& e) {
      return finish(RunStatus::Fault, e.what());
    }
    return finish(RunStatus::Halted, "");
  }

 private:
  RunResult finish(RunStatus s, std::string msg) {
    r_.status = s;
    r_.message = std::move(msg);
    return std::move(r_);
  }

  bool power_off(double at, bool injected) {
    for (auto& tile : r_.machine.tiles) tile.clear_latch();
    double resume;
    if (injected && trace_.always_on()) {
      resume = at + opt_.outage;
    } else if (injected && trace_.is_on(at)) {
      resume = trace_.next_on(trace_.next_edge(at));
    } else {
      resume = trace_.next_on(at);
    }
    if (resume == kNever) return false;
    r_.ledger.idle(resume - at, false);
    ++r_.ledger.restarts;
    t_ = resume;
    need_restore_ = true;
    return true;
  }

  Tile& tile(std::uint16_t index) {
    auto& tiles = r_.machine.tiles;
    if (index >= tiles.size()) {
      throw ControllerError(fmt::format("instruction addresses data tile {} of {}", index, tiles.size()));
    }
    return tiles[index];
  }

  void apply_activation(const Instruction& instr) {
    if (const auto* a = std::get_if<ActivateColumnsInstr>(&instr)) tile(a->tile).activate_columns(a->cols);
    if (const auto* a = std::get_if<ActivateRangeInstr>(&instr)) tile(a->tile).activate_range(a->start, a->end);
  }

  /// Re-reads parity and the valid PC and re-issues stored_act, throttled like
  /// an instruction. Idempotent, so a cut simply repeats it.
  bool restore(const IssueSchedule& sched, double off_edge) {
    Machine& m = r_.machine;
    std::optional<Instruction> act;
    if (m.arch.stored_act != kHaltWord) {
      act = decode(m.arch.stored_act);
      if (!is_activation(*act)) throw ControllerError("stored activation register holds a non-activation");
    }
    double energy = double(kPcBits + kParityBits) * c_.read.energy;
    double busy = c_.read.latency;
    if (act) {
      energy += double(kActBits) * c_.read.energy + c_.broadcast_energy(*act, 0);
      busy += c_.activate.latency;
    }
    const double period = std::max(sched.restore_period, busy);
    const double debt = take_debt();
    const double start = t_ + period - busy + debt;
    const double end = start + busy;
    if (off_edge < end) {
      r_.ledger.idle(std::min(off_edge, start) - t_, true);
      if (off_edge > start) {
        const double f = (off_edge - start) / busy;
        r_.ledger.charge(Category::Restore, f * energy, off_edge - start);
        debt_ = end - off_edge;
      } else {
        debt_ = std::max(0.0, debt - (off_edge - t_));
      }
      return power_off(off_edge, false);
    }
    r_.ledger.idle(start - t_, true);
    if (act) apply_activation(*act);
    r_.ledger.charge(Category::Restore, energy, busy);
    t_ = end;
    need_restore_ = false;
    return true;
  }

  // Throttle time still owed by a slot that spent energy before a cut; paid
  // with on-time before the next spend so that the budget holds across outages.
  double take_debt() {
    const double d = debt_;
    debt_ = 0.0;
    return d;
  }

  bool step(const IssueSchedule& sched, double off_edge) {
    Machine& m = r_.machine;
    const std::uint32_t pc = m.arch.valid_pc();
    const Word64 word = m.program->fetch(pc);
    const auto decoded = try_decode(word);
    if (!decoded) throw ControllerError(fmt::format("undecodable word {:#018x} at PC {}", word.bits, pc));
    const Instruction& instr = *decoded;
    const auto phases = phases_for(instr, opt_.order, opt_.scheme);
    std::vector<double> lat(phases.size());
    for (std::size_t i = 0; i < phases.size(); ++i) lat[i] = c_.phase_latency(phases[i], instr);
    double busy = 0.0;
    for (double l : lat) busy += l;
    const double period = std::max(sched.period[pc], busy);
    const double debt = take_debt();
    const double start = t_ + period - busy + debt;
    const double end = start + busy;

    // Locate the cut, if any, as (phase index, delivered fraction).
    std::size_t cut_k = phases.size();
    double cut_f = 0.0;
    double cut_time = kNever;
    bool injected = false;
    if (cut_armed_ && opt_.cut->instruction == pc) {
      cut_armed_ = false;
      const auto it = std::find(phases.begin(), phases.end(), opt_.cut->phase);
      if (it != phases.end()) {
        const std::size_t k = it - phases.begin();
        const double f = std::clamp(opt_.cut->fraction, 0.0, 1.0);
        double at = start + f * lat[k];
        for (std::size_t i = 0; i < k; ++i) at += lat[i];
        if (at <= off_edge) {
          cut_k = k;
          cut_f = f;
          cut_time = at;
          injected = true;
          r_.cut_fired = true;
        }
      }
    }
    if (!injected && off_edge < end) {
      cut_time = off_edge;
      cut_k = 0;
      cut_f = 0.0;
      double elapsed = off_edge - start;
      if (elapsed > 0.0) {
        for (std::size_t i = 0; i < phases.size(); ++i) {
          if (elapsed < lat[i]) {
            cut_k = i;
            cut_f = elapsed / lat[i];
            break;
          }
          elapsed -= lat[i];
        }
      }
    }
    const bool cut = cut_time != kNever;
    const bool progress = !cut || cut_k > 0 || cut_f > 0.0;

    r_.ledger.idle(std::min(start, cut_time) - t_, true);
    const bool dead = progress && inflight_ && *inflight_ == pc;
    if (progress) {
      ++r_.attempts;
      if (dead) ++r_.ledger.reexecuted;
    }
    bool completed = !cut;
    for (std::size_t i = 0; i < phases.size(); ++i) {
      double f = 1.0;
      if (cut) {
        if (i > cut_k || (i == cut_k && cut_f <= 0.0)) break;
        if (i == cut_k) f = cut_f;
        if (i == phases.size() - 1 && f >= 1.0) completed = true;
      }
      run_phase(phases[i], instr, word, pc, f, lat[i], dead);
    }
    if (completed) ++r_.ledger.instructions;

    if (cut) {
      if (progress) inflight_ = pc;
      if (m.halted) return true;
      debt_ = progress ? end - cut_time : std::max(0.0, debt - (cut_time - t_));
      return power_off(cut_time, injected);
    }
    inflight_.reset();
    t_ = end;
    return true;
  }

  void run_phase(Phase p, const Instruction& instr, Word64 word, std::uint32_t pc, double f, double latency,
                 bool dead) {
    Machine& m = r_.machine;
    ArchState& a = m.arch;
    const Category work = dead ? Category::Dead : Category::Productive;
    switch (p) {
      case Phase::Fetch:
        r_.ledger.charge(work, f * c_.fetch.energy, f * latency);
        if (f >= 1.0 && std::holds_alternative<HaltInstr>(instr)) m.halted = true;
        return;
      case Phase::Broadcast: {
        const auto t = tile_of(instr);
        const std::size_t active = t ? tile(*t).active_count() : 0;
        double energy = f * c_.broadcast_energy(instr, active);
        std::visit(Overload{
                       [&](const LogicInstr& i) {
                         const LogicOptions lo{opt_.completion, opt_.strict_preset && !dead};
                         const std::size_t changed = tile(i.tile).logic_op(gate_semantics(i.gate), i.rows, f, lo);
                         energy += double(changed) * c_.gate(i.gate).switch_energy;
                       },
                       [&](const WriteBitInstr& i) { tile(i.tile).write_bit(i.row, i.value, f, opt_.completion); },
                       [&](const WriteRowInstr& i) { tile(i.tile).write_row(i.row, m.buffer, f, opt_.completion); },
                       [&](const ReadRowInstr& i) {
                         if (!pulse_completes(f, opt_.completion)) return;
                         m.buffer = tile(i.tile).read_row(i.row);
                         r_.readouts[pc] = m.buffer;
                       },
                       [&](const ActivateColumnsInstr&) {
                         if (pulse_completes(f, opt_.completion)) apply_activation(instr);
                       },
                       [&](const ActivateRangeInstr&) {
                         if (pulse_completes(f, opt_.completion)) apply_activation(instr);
                       },
                       [&](const HaltInstr&) {},
                   },
                   instr);
        r_.ledger.charge(work, energy, f * latency);
        return;
      }
      case Phase::StoreAct:
        if (pulse_completes(f, opt_.completion)) a.stored_act = word;  // a torn write keeps the old value
        break;
      case Phase::WritePC: {
        const std::uint32_t next = pc + 1;
        const unsigned bits = f >= 1.0 ? kPcBits : static_cast<unsigned>(std::floor(f * kPcBits));
        const std::uint32_t mask = bits >= kPcBits ? ~std::uint32_t{0} : (std::uint32_t{1} << bits) - 1;
        std::uint32_t& reg = opt_.scheme == BackupScheme::SinglePc ? a.pc_a : (a.parity ? a.pc_a : a.pc_b);
        reg = (next & mask) | (reg & ~mask);
        break;
      }
      case Phase::FlipParity:
        if (pulse_completes(f, opt_.completion)) a.parity = !a.parity;
        break;
    }
    r_.ledger.charge(Category::Backup, f * c_.backup_energy(p), f * latency);
  }

  const Simulator& sim_;
  const Simulator::Costs& c_;
  const RunOptions& opt_;
  const PowerTrace& trace_;
  RunResult r_;
  double t_ = 0.0;
  double debt_ = 0.0;
  bool need_restore_ = false;
  bool cut_armed_ = false;
  std::optional<std::uint32_t> inflight_;
};

}  // namespace

RunResult Simulator::run(Machine machine, const RunOptions& options) const {
  if (options.throttle.enabled) options.throttle.validate();
  return Run(*this, *costs_, std::move(machine), options).execute();
}

}  // namespace spinpim
