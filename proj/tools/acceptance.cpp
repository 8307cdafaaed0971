// Acceptance checks: one PASS/FAIL line per criterion, exit 0 iff all pass.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "spinpim/compiler.hpp"
#include "spinpim/crash.hpp"
#include "spinpim/svm.hpp"

using namespace spinpim;

namespace {

// Pinned tolerances and limits.
constexpr double kTruthTableSeconds = 1.0;
constexpr double kIdempotenceSeconds = 1.0;
constexpr double kArithmeticSeconds = 300.0;
constexpr double kCrashSeconds = 600.0;
constexpr double kSvmSeconds = 600.0;
constexpr std::size_t kCrashMinInstructions = 1000;
constexpr std::uint64_t kMaxReexecutedPerCut = 1;
constexpr double kRestoreShareAtLowDuty = 1e-3;
constexpr double kBudgetRelTol = 1e-9;
constexpr std::size_t kFuzzValid = 10000;
constexpr std::size_t kFuzzWords = 1000000;
constexpr double kMinAccuracy = 0.70;
constexpr std::size_t kMaxSvs = 200;
constexpr double kMarginRelTol = 0.01;
constexpr std::size_t kTrendInputs = 5;

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool boolean_oracle(GateName g, bool a, bool b) {
  switch (g) {
    case GateName::Not: return !a;
    case GateName::Copy: return a;
    case GateName::And: return a && b;
    case GateName::Nand: return !(a && b);
    case GateName::Or: return a || b;
    case GateName::Nor: return !(a || b);
  }
  return false;
}

std::vector<MtjState> inputs_for(const GateKind& k, bool a, bool b) {
  if (k.arity == 1) return {state_of(a)};
  return {state_of(a), state_of(b)};
}

DeviceParams device_for(Target t) { return t == Target::STT ? DeviceParams::future_stt() : DeviceParams::future_she(); }

Machine machine_for(const std::vector<Instruction>& program, Target t, std::size_t tiles = 1) {
  return Machine::create(InstructionMemory::from_program(program), tiles, variant_of(t));
}

RunOptions strict_options(Target t) {
  RunOptions o;
  o.strict_preset = t == Target::STT;
  return o;
}

// Throttled runs seen by any criterion, checked together by the budget criterion.
struct BudgetSample {
  std::string label;
  EnergyLedger ledger;
  double budget_w = 0.0;
  double max_instr_energy = 0.0;
};
std::vector<BudgetSample> g_budget_samples;

void record_budget(std::string label, const EnergyLedger& l, const Simulator& sim, const InstructionMemory& mem,
                   const RunOptions& o) {
  if (!o.throttle.enabled) return;
  const IssueSchedule s = sim.schedule(mem, o.throttle, o.scheme);
  g_budget_samples.push_back({std::move(label), l, o.throttle.budget_w, s.max_energy_bound});
}

Verdict truth_tables() {
  const auto t0 = Clock::now();
  std::size_t checked = 0, wrong = 0;
  for (GateName g : kAllGates) {
    const GateKind k = gate_semantics(g);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        if (k.arity == 1 && b != a) continue;
        const auto in = inputs_for(k, a, b);
        const bool want = boolean_oracle(g, a, b);
        wrong += logic_value(apply_gate_stt(in, state_of(k.preset), k, 1.0)) != want;
        ++checked;
        for (int stale = 0; stale < 2; ++stale) {
          wrong += logic_value(apply_gate_she(in, state_of(stale), k)) != want;
          ++checked;
        }
      }
    }
  }
  const double t = seconds_since(t0);
  return {wrong == 0 && t < kTruthTableSeconds, fmt::format("{} evaluations, {} wrong, {:.3f} s", checked, wrong, t)};
}

Verdict idempotence() {
  const auto t0 = Clock::now();
  std::size_t checked = 0, wrong = 0;
  for (auto model : {CompletionModel::Deterministic, CompletionModel::EarlySwitch}) {
    for (GateName g : kAllGates) {
      const GateKind k = gate_semantics(g);
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          if (k.arity == 1 && b != a) continue;
          const auto in = inputs_for(k, a, b);
          const MtjState golden = apply_gate_stt(in, state_of(k.preset), k, 1.0, model);
          for (double f : {0.0, 0.25, 0.5, 0.75}) {
            const MtjState partial = apply_gate_stt(in, state_of(k.preset), k, f, model);
            wrong += apply_gate_stt(in, partial, k, 1.0, model) != golden;
            ++checked;
          }
          // SHE writes are stateless in the output: any interrupted value is overwritten.
          const MtjState she = apply_gate_she(in, MtjState::P, k);
          for (int stale = 0; stale < 2; ++stale) {
            wrong += apply_gate_she(in, state_of(stale), k) != she;
            ++checked;
          }
        }
      }
    }
  }
  const double t = seconds_since(t0);
  return {wrong == 0 && t < kIdempotenceSeconds, fmt::format("{} splits, {} diverged, {:.3f} s", checked, wrong, t)};
}

Verdict full_adder() {
  bool ok = true;
  std::string detail;
  for (Target t : {Target::STT, Target::SHE}) {
    const Program p = build_kernel(Kernel::FullAdd, 1, t, 8);
    std::set<std::uint16_t> scratch;
    for (const auto& reg : p.layout.regions) {
      if (reg.role == RegionRole::Scratch) scratch.insert(reg.rows.begin(), reg.rows.end());
    }
    Machine m = machine_for(p.instructions, t);
    for (std::size_t c = 0; c < 8; ++c) {
      m.tiles[0].set_cell(p.layout.region("a").rows[0], c, c & 1u);
      m.tiles[0].set_cell(p.layout.region("b").rows[0], c, (c >> 1) & 1u);
      m.tiles[0].set_cell(p.layout.region("cin").rows[0], c, (c >> 2) & 1u);
    }
    const RunResult r = Simulator(device_for(t)).run(std::move(m), strict_options(t));
    std::size_t correct = 0;
    if (r.status == RunStatus::Halted) {
      for (std::size_t c = 0; c < 8; ++c) {
        correct += read_value(r.machine.tiles[0], p.layout.region("result").rows, c) ==
                   static_cast<std::uint64_t>(std::popcount(c));
      }
    }
    const std::size_t nands = p.count(Opcode::Nand);
    ok = ok && nands == 9 && scratch.size() == 7 && correct == 8;
    detail += fmt::format("{}{}: {} NAND, {} scratch rows, {}/8 correct", detail.empty() ? "" : "; ", to_string(t),
                          nands, scratch.size(), correct);
  }
  return {ok, detail};
}

Verdict exhaustive_arithmetic() {
  const auto t0 = Clock::now();
  const std::uint64_t n = 1u << 16;
  std::size_t mismatches = 0, pairs = 0;
  struct Case {
    Kernel kernel;
    std::function<std::uint64_t(std::uint64_t, std::uint64_t)> oracle;
  };
  const std::vector<Case> cases{
      {Kernel::Add, [](std::uint64_t a, std::uint64_t b) { return a + b; }},
      {Kernel::Sub, [](std::uint64_t a, std::uint64_t b) { return ((a - b) & 0xFF) | (std::uint64_t(a >= b) << 8); }},
      {Kernel::Mult, [](std::uint64_t a, std::uint64_t b) { return a * b; }},
  };
  for (Target t : {Target::STT, Target::SHE}) {
    const Simulator sim(device_for(t));
    for (const auto& cs : cases) {
      const Program p = build_kernel(cs.kernel, 8, t);
      const auto& ra = p.layout.region("a").rows;
      const auto& rb = p.layout.region("b").rows;
      const auto& res = p.layout.region("result").rows;
      const auto mem = InstructionMemory::from_program(p.instructions);
      for (std::uint64_t base = 0; base < n; base += kTileCols) {
        Machine m = Machine::create(mem, 1, variant_of(t));
        for (std::size_t c = 0; c < kTileCols; ++c) {
          preload_value(m.tiles[0], ra, c, (base + c) & 0xFF);
          preload_value(m.tiles[0], rb, c, (base + c) >> 8);
        }
        const RunResult r = sim.run(std::move(m), strict_options(t));
        for (std::size_t c = 0; c < kTileCols; ++c) {
          const std::uint64_t a = (base + c) & 0xFF, b = (base + c) >> 8;
          mismatches += r.status != RunStatus::Halted || read_value(r.machine.tiles[0], res, c) != cs.oracle(a, b);
          ++pairs;
        }
      }
    }
  }
  const double t = seconds_since(t0);
  return {mismatches == 0 && t < kArithmeticSeconds,
          fmt::format("add/sub/mult x STT/SHE: {} pairs, {} mismatches, {:.1f} s", pairs, mismatches, t)};
}

Verdict crash_consistency(unsigned threads) {
  const auto t0 = Clock::now();
  const Target t = Target::STT;
  const Program p = build_kernel(Kernel::Mult, 8, t);
  Machine m = machine_for(p.instructions, t);
  std::mt19937_64 rng(7);
  for (std::size_t c = 0; c < kTileCols; ++c) {
    preload_value(m.tiles[0], p.layout.region("a").rows, c, rng() & 0xFF);
    preload_value(m.tiles[0], p.layout.region("b").rows, c, rng() & 0xFF);
  }
  const Simulator sim(device_for(t));
  const RunOptions o = strict_options(t);
  const auto cuts = enumerate_cuts(p.instructions, CutGranularity::Full);
  const SweepReport rep = crash_sweep(sim, m, o, cuts, threads);
  const double secs = seconds_since(t0);
  std::string detail = fmt::format("{} instructions, {} cuts, {} passed, max re-executed {}, {:.1f} s",
                                   p.instructions.size(), cuts.size(), rep.passed, rep.max_extra_attempts, secs);
  if (const auto* f = rep.first_failure()) detail += fmt::format("; first failure {}: {}", to_string(f->cut), f->message);
  return {p.instructions.size() >= kCrashMinInstructions && rep.all_passed() &&
              rep.max_extra_attempts <= kMaxReexecutedPerCut && secs < kCrashSeconds,
          detail};
}

struct AdultBench {
  SvmModel model;
  QuantizedModel q;
  std::vector<Sample> data;
  std::vector<std::vector<std::uint8_t>> inputs;
};

AdultBench load_adult(const std::filesystem::path& dir) {
  AdultBench b;
  b.model = load_model(dir / "adult_model.txt");
  b.q = quantize(b.model);
  b.data = load_dataset(dir / "adult_test.csv");
  for (const auto& s : b.data) b.inputs.push_back(s.x);
  return b;
}

struct SvmRun {
  SvmRunResult result;
  std::size_t instructions = 0;
};

SvmRun run_adult(const AdultBench& b, Target t, std::size_t batch, std::span<const std::vector<std::uint8_t>> inputs,
                 const RunOptions& o, const std::string& label) {
  SvmCodegenConfig cfg;
  cfg.target = t;
  cfg.batch = batch;
  const SvmProgram sp = codegen_svm(b.q, cfg);
  const Simulator sim(device_for(t));
  SvmRun r{run_svm(sim, o, sp, b.q, inputs), sp.program.instructions.size()};
  record_budget(label, r.result.ledger, sim, *InstructionMemory::from_program(sp.program.instructions), o);
  return r;
}

// Mult kernel runs at duty 1 on both targets plus the SVM rows of the trend.
Verdict continuous_zeros(const std::vector<EnergyLedger>& duty_one) {
  std::size_t bad = 0;
  for (const auto& l : duty_one) bad += !(l.dead_e == 0.0 && l.restore_e == 0.0 && l.restore_t == 0.0);
  return {bad == 0 && !duty_one.empty(), fmt::format("{} duty-1 runs, {} with nonzero dead/restore", duty_one.size(), bad)};
}

Verdict svm_trends(const AdultBench& b, std::vector<EnergyLedger>& duty_one) {
  const std::span<const std::vector<std::uint8_t>> in(b.inputs.data(), kTrendInputs);
  std::vector<EnergyLedger> rows;
  std::vector<std::vector<Inference>> answers;
  bool halted = true;
  for (double duty : {1.0, 0.25, 0.01}) {
    RunOptions o;
    o.trace = PowerTrace::square_wave(16e3, duty);
    const SvmRun r = run_adult(b, Target::STT, kTrendInputs, in, o, fmt::format("svm stt duty {}", duty));
    halted = halted && r.result.status == RunStatus::Halted;
    rows.push_back(r.result.ledger);
    answers.push_back(r.result.inferences);
  }
  duty_one.push_back(rows[0]);
  bool ok = halted;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ok = ok && rows[i].total_t > rows[i - 1].total_t && rows[i].dead_e >= rows[i - 1].dead_e &&
         rows[i].restore_e >= rows[i - 1].restore_e;
    ok = ok && answers[i].size() == answers[0].size();
    for (std::size_t k = 0; ok && k < answers[i].size(); ++k) ok = answers[i][k].scores == answers[0][k].scores;
  }
  const double share = rows.back().restore_t / rows.back().total_t;
  ok = ok && share <= kRestoreShareAtLowDuty;
  return {ok, fmt::format("T = {:.1f} / {:.1f} / {:.1f} us, dead = {:.4g} / {:.4g} / {:.4g} uJ, restore share at 0.01 = "
                          "{:.4f}%",
                          rows[0].total_t * 1e6, rows[1].total_t * 1e6, rows[2].total_t * 1e6, rows[0].dead_e * 1e6,
                          rows[1].dead_e * 1e6, rows[2].dead_e * 1e6, share * 100)};
}

Verdict she_advantage(const AdultBench& b, std::vector<EnergyLedger>& duty_one) {
  const std::span<const std::vector<std::uint8_t>> in(b.inputs.data(), kTrendInputs);
  const SvmRun stt = run_adult(b, Target::STT, kTrendInputs, in, {}, "svm stt");
  const SvmRun she = run_adult(b, Target::SHE, kTrendInputs, in, {}, "svm she");
  duty_one.push_back(stt.result.ledger);
  duty_one.push_back(she.result.ledger);
  bool same = stt.result.inferences.size() == she.result.inferences.size();
  for (std::size_t k = 0; same && k < stt.result.inferences.size(); ++k) {
    same = stt.result.inferences[k].scores == she.result.inferences[k].scores;
  }
  return {same && she.instructions < stt.instructions && she.result.ledger.total_e < stt.result.ledger.total_e,
          fmt::format("instructions STT {} vs SHE {}, energy STT {:.4f} vs SHE {:.4f} uJ", stt.instructions,
                      she.instructions, stt.result.ledger.total_e * 1e6, she.result.ledger.total_e * 1e6)};
}

void kernel_budget_runs(std::vector<EnergyLedger>& duty_one) {
  for (Target t : {Target::STT, Target::SHE}) {
    const Program p = build_kernel(Kernel::Mult, 8, t);
    Machine m = machine_for(p.instructions, t);
    for (std::size_t c = 0; c < kTileCols; ++c) {
      preload_value(m.tiles[0], p.layout.region("a").rows, c, c & 0xFF);
      preload_value(m.tiles[0], p.layout.region("b").rows, c, (c * 7) & 0xFF);
    }
    const Simulator sim(device_for(t));
    for (double duty : {1.0, 0.25, 0.01}) {
      for (ThrottleMode mode : {ThrottleMode::Static, ThrottleMode::PerInstruction}) {
        RunOptions o = strict_options(t);
        o.trace = PowerTrace::square_wave(16e3, duty);
        o.throttle.mode = mode;
        const RunResult r = sim.run(m, o);
        if (duty == 1.0) duty_one.push_back(r.ledger);
        record_budget(fmt::format("mult8 {} duty {} {}", to_string(t), duty,
                                  mode == ThrottleMode::Static ? "static" : "per-instruction"),
                      r.ledger, sim, *m.program, o);
      }
    }
  }
  // A tighter budget on the slower device.
  const Program p = build_kernel(Kernel::Add, 8, Target::STT);
  const Machine m = machine_for(p.instructions, Target::STT);
  const Simulator sim(DeviceParams::modern_stt());
  RunOptions o;
  o.trace = PowerTrace::square_wave(16e3, 0.3);
  o.throttle.budget_w = 50e-6;
  record_budget("add8 modern 50 uW", sim.run(m, o).ledger, sim, *m.program, o);
}

Verdict power_budget() {
  std::size_t bad = 0;
  double worst = 0.0;
  std::string worst_label;
  for (const auto& s : g_budget_samples) {
    const double p = s.ledger.average_on_power();
    const double limit = (s.budget_w + s.max_instr_energy / s.ledger.on_t) * (1 + kBudgetRelTol);
    bad += p > limit;
    if (p / s.budget_w > worst) {
      worst = p / s.budget_w;
      worst_label = s.label;
    }
  }
  return {bad == 0 && !g_budget_samples.empty(),
          fmt::format("{} throttled runs, {} over budget; highest E/on_t = {:.4f} x budget ({})", g_budget_samples.size(),
                      bad, worst, worst_label)};
}

Instruction random_instruction(std::mt19937_64& rng) {
  auto u = [&](unsigned n) { return static_cast<std::uint16_t>(rng() % n); };
  const std::uint16_t tile = u(512);
  switch (rng() % 7) {
    case 0: {
      const GateName g = kAllGates[rng() % 6];
      const std::uint16_t in1 = u(1024);
      const bool unary = g == GateName::Not || g == GateName::Copy;
      const std::uint16_t in2 = unary ? in1 : static_cast<std::uint16_t>((u(512) * 2) | (in1 & 1));
      const std::uint16_t out = static_cast<std::uint16_t>((u(512) * 2) | ((in1 & 1) ^ 1));
      return LogicInstr{g, tile, RowTriple::binary(in1, in2, out)};
    }
    case 1: return WriteBitInstr{tile, u(1024), bool(rng() & 1)};
    case 2: return ReadRowInstr{tile, u(1024)};
    case 3: return WriteRowInstr{tile, u(1024)};
    case 4: {
      std::vector<std::uint16_t> cols(1 + rng() % 5);
      for (auto& c : cols) c = u(1024);
      return ActivateColumnsInstr::make(tile, cols);
    }
    case 5: {
      std::uint16_t a = u(1024), b = u(1024);
      if (a > b) std::swap(a, b);
      return ActivateRangeInstr{tile, a, b};
    }
    default: return HaltInstr{};
  }
}

Verdict isa_round_trip() {
  std::mt19937_64 rng(2024);
  std::vector<Instruction> prog;
  for (std::size_t n = 0; n < kFuzzValid; ++n) prog.push_back(random_instruction(rng));
  std::size_t bad_valid = 0;
  for (const auto& i : prog) bad_valid += decode(encode(i)) != i;
  const bool text_ok = assemble(disassemble(prog)) == prog;
  const bool bin_ok = decode_program(encode_program(prog)) == prog;
  std::size_t accepted = 0, misdecoded = 0;
  for (std::size_t n = 0; n < kFuzzWords; ++n) {
    std::uint64_t w = rng();
    if (n % 2) {
      w &= (std::uint64_t{0xF} << 60) | (std::uint64_t{0x1FF} << 51) | (std::uint64_t{0x3FF} << 41) |
           (rng() & (std::uint64_t{0xFFFFF} << 21));
    }
    if (const auto d = try_decode(Word64{w})) {
      ++accepted;
      misdecoded += encode(*d).bits != w;
    }
  }
  return {bad_valid == 0 && text_ok && bin_ok && misdecoded == 0,
          fmt::format("{} valid instructions ({} bad, text {}, binary {}); {} random words, {} accepted, {} mis-decoded",
                      prog.size(), bad_valid, text_ok ? "ok" : "BAD", bin_ok ? "ok" : "BAD", kFuzzWords, accepted,
                      misdecoded)};
}

Verdict end_to_end(const AdultBench& b) {
  const auto t0 = Clock::now();
  const SvmRun r = run_adult(b, Target::STT, kTrendInputs, b.inputs, {}, "svm stt end to end");
  std::size_t exact = 0, correct = 0;
  for (std::size_t i = 0; i < r.result.inferences.size(); ++i) {
    exact += r.result.inferences[i].scores == oracle_infer(b.q, b.inputs[i]).scores;
    correct += r.result.inferences[i].label == b.data[i].label;
  }
  const double acc = b.data.empty() ? 0.0 : double(correct) / b.data.size();
  const double secs = seconds_since(t0);
  const bool ok = r.result.status == RunStatus::Halted && r.result.inferences.size() == b.data.size() &&
                  exact == b.data.size() && acc >= kMinAccuracy && b.q.svs.size() <= kMaxSvs && secs < kSvmSeconds;
  return {ok, fmt::format("{} SVs, {}/{} inputs bit-exact, accuracy {:.2f}%, {:.1f} s", b.q.svs.size(), exact,
                          b.data.size(), acc * 100, secs)};
}

// Hand series-parallel NAND window: inputs in parallel, output at P in series.
std::array<double, 2> nand_by_hand(double rp, double rap, double i) {
  const double worst_switch = std::max(rp * rap / (rp + rap), rp / 2.0) + rp;
  const double hold = rap / 2.0 + rp;
  return {i * worst_switch, i * hold};
}

Verdict margins() {
  bool ok = true;
  std::string detail;
  for (auto d : {DeviceParams::future_stt(), DeviceParams::modern_stt()}) {
    d.r_transistor = 0.0;
    const VoltageWindow w = solve_drive_voltage(gate_semantics(GateName::Nand), d);
    const auto hand = nand_by_hand(d.r_p, d.r_ap, d.i_switch);
    const bool close = std::abs(w.v_min - hand[0]) <= kMarginRelTol * hand[0] &&
                       std::abs(w.v_max - hand[1]) <= kMarginRelTol * hand[1];
    ok = ok && w.feasible && w.v_min < w.v_max && close;
    detail += fmt::format("{}{} NAND [{:.1f}, {:.1f}] mV vs hand [{:.1f}, {:.1f}]", detail.empty() ? "" : "; ",
                          to_string(d.technology), w.v_min * 1e3, w.v_max * 1e3, hand[0] * 1e3, hand[1] * 1e3);
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string data_dir = SPINPIM_ACCEPTANCE_DATA;
  unsigned threads = 0;
  app.add_option("--data", data_dir, "directory with adult_model.txt and adult_test.csv")->capture_default_str();
  app.add_option("-j,--threads", threads, "crash-sweep worker threads (0 = hardware concurrency)");
  CLI11_PARSE(app, argc, argv);

  std::vector<std::pair<std::string, Verdict>> results;
  auto run = [&](std::string name, const std::function<Verdict()>& fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, fmt::format("exception: {}", e.what())};
    }
    std::cout << fmt::format("[{}] {:2}. {}: {}\n", v.pass ? "PASS" : "FAIL", results.size() + 1, name, v.detail)
              << std::flush;
    results.emplace_back(std::move(name), std::move(v));
  };

  std::optional<AdultBench> adult;
  std::string adult_error;
  try {
    adult = load_adult(data_dir);
  } catch (const std::exception& e) {
    adult_error = e.what();
  }
  auto need_adult = [&]() -> const AdultBench& {
    if (!adult) throw std::runtime_error("ADULT data: " + adult_error);
    return *adult;
  };

  std::vector<EnergyLedger> duty_one;
  std::optional<Verdict> trend, she;
  // The SVM runs feed the zero and budget criteria, so run them up front.
  try {
    trend = svm_trends(need_adult(), duty_one);
  } catch (const std::exception& e) {
    trend = Verdict{false, fmt::format("exception: {}", e.what())};
  }
  try {
    she = she_advantage(need_adult(), duty_one);
  } catch (const std::exception& e) {
    she = Verdict{false, fmt::format("exception: {}", e.what())};
  }
  kernel_budget_runs(duty_one);

  run("gate truth tables", truth_tables);
  run("interrupted-pulse idempotence", idempotence);
  run("full-adder lowering", full_adder);
  run("exhaustive 8-bit arithmetic", exhaustive_arithmetic);
  run("crash-consistency sweep", [&] { return crash_consistency(threads); });
  run("continuous-power zeros", [&] { return continuous_zeros(duty_one); });
  run("duty-cycle trends", [&] { return *trend; });
  run("SHE advantage", [&] { return *she; });
  run("power budget", power_budget);
  run("ISA round trip", isa_round_trip);
  run("end-to-end SVM", [&] { return end_to_end(need_adult()); });
  run("margin feasibility", margins);

  const auto passed = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.second.pass; });
  std::cout << fmt::format("{}/{} criteria passed\n", passed, results.size());
  return passed == static_cast<long>(results.size()) ? 0 : 1;
}
