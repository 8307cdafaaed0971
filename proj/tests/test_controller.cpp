#include <doctest.h>

#include <numeric>

#include "helpers.hpp"
#include "spinpim/compiler.hpp"
#include "spinpim/controller.hpp"

using namespace spinpim;
using spinpim::testing::machine_for;

namespace {

std::vector<Instruction> small_program() {
  return {
      ActivateColumnsInstr::make(0, {1, 3}),
      WriteBitInstr{0, 2, true},
      WriteBitInstr{0, 4, false},
      WriteBitInstr{0, 5, false},
      LogicInstr{GateName::Nand, 0, RowTriple::binary(2, 4, 5)},
      HaltInstr{},
  };
}

Machine adder_machine(Target t = Target::STT) {
  const Program p = build_kernel(Kernel::Add, 4, t, 16);
  Machine m = machine_for(p.instructions, t);
  for (std::size_t c = 0; c < 16; ++c) {
    preload_value(m.tiles[0], p.layout.region("a").rows, c, c);
    preload_value(m.tiles[0], p.layout.region("b").rows, c, 15 - c / 2);
  }
  return m;
}

}  // namespace

TEST_CASE("phases of each instruction class") {
  const auto logic = phases_for(LogicInstr{});
  CHECK(logic == std::vector<Phase>{Phase::Fetch, Phase::Broadcast, Phase::WritePC, Phase::FlipParity});
  const auto act = phases_for(ActivateRangeInstr{0, 0, 3});
  CHECK(act == std::vector<Phase>{Phase::Fetch, Phase::Broadcast, Phase::StoreAct, Phase::WritePC, Phase::FlipParity});
  CHECK(phases_for(ActivateRangeInstr{0, 0, 3}, PhaseOrder::StoreActLast).back() == Phase::StoreAct);
  CHECK(phases_for(HaltInstr{}) == std::vector<Phase>{Phase::Fetch});
  CHECK(phases_for(LogicInstr{}, PhaseOrder::StoreActFirst, BackupScheme::SinglePc).back() == Phase::WritePC);
  for (Phase p : {Phase::Fetch, Phase::Broadcast, Phase::StoreAct, Phase::WritePC, Phase::FlipParity}) {
    CHECK(parse_phase(to_string(p)) == p);
  }
}

TEST_CASE("sequencing: PC advances, parity flips, stored_act follows activations") {
  const auto prog = small_program();
  const Simulator sim(DeviceParams::future_stt());
  const RunResult r = sim.run(machine_for(prog, Target::STT), {});
  REQUIRE(r.status == RunStatus::Halted);
  const ArchState& a = r.machine.arch;
  CHECK(a.valid_pc() == prog.size() - 1);
  CHECK(a.parity == ((prog.size() - 1) % 2 == 1));
  CHECK(a.stored_act == encode(prog[0]));
  CHECK(r.machine.tiles[0].cell(5, 1));
  CHECK(r.machine.tiles[0].cell(5, 3));
  CHECK_FALSE(r.machine.tiles[0].cell(5, 0));
  CHECK(r.attempts == prog.size());
  CHECK(r.ledger.instructions == prog.size());
}

TEST_CASE("continuous power: zero dead and restore, total time is the sum of issue periods") {
  for (Target t : {Target::STT, Target::SHE}) {
    const Machine m = adder_machine(t);
    const Simulator sim(spinpim::testing::device_for(t));
    const RunResult r = sim.run(m, {});
    REQUIRE(r.status == RunStatus::Halted);
    CHECK(r.ledger.dead_e == 0.0);
    CHECK(r.ledger.restore_e == 0.0);
    CHECK(r.ledger.restore_t == 0.0);
    CHECK(r.ledger.restarts == 0);
    CHECK(r.ledger.consistent());
    const auto sched = sim.schedule(*m.program, {});
    const double sum = std::accumulate(sched.period.begin(), sched.period.end(), 0.0);
    CHECK(r.ledger.total_t == doctest::Approx(sum).epsilon(1e-9));
  }
}

TEST_CASE("lower duty takes longer and stays within the power budget") {
  const Program p = build_kernel(Kernel::Mult, 8, Target::STT);
  Machine m = machine_for(p.instructions, Target::STT);
  for (std::size_t c = 0; c < 16; ++c) {
    preload_value(m.tiles[0], p.layout.region("a").rows, c, 17 * c);
    preload_value(m.tiles[0], p.layout.region("b").rows, c, 255 - c);
  }
  const Simulator sim(DeviceParams::future_stt());
  double prev = 0.0;
  for (double duty : {1.0, 0.25, 0.01}) {
    RunOptions o;
    o.trace = PowerTrace::square_wave(16e3, duty);
    const RunResult r = sim.run(m, o);
    REQUIRE(r.status == RunStatus::Halted);
    CHECK(r.ledger.total_t > prev);
    prev = r.ledger.total_t;
    CHECK(r.machine.same_data(sim.run(m, {}).machine));
    CHECK(r.ledger.consistent());
    CHECK(r.ledger.average_on_power() <= o.throttle.budget_w * (1 + 1e-9));
  }
}

TEST_CASE("per-instruction throttling also respects the budget") {
  const Machine m = adder_machine();
  const Simulator sim(DeviceParams::modern_stt());
  for (double duty : {1.0, 0.3, 0.05}) {
    RunOptions o;
    o.trace = PowerTrace::square_wave(16e3, duty);
    o.throttle.mode = ThrottleMode::PerInstruction;
    o.throttle.budget_w = 50e-6;
    const RunResult r = sim.run(m, o);
    REQUIRE(r.status == RunStatus::Halted);
    CHECK(r.ledger.average_on_power() <= o.throttle.budget_w * (1 + 1e-9));
  }
}

TEST_CASE("a cut mid-broadcast is repaired by re-execution") {
  const Machine m = adder_machine();
  const Simulator sim(DeviceParams::future_stt());
  const RunResult golden = sim.run(m, {});
  RunOptions o;
  o.cut = CutSpec{40, Phase::Broadcast, 0.4};
  const RunResult r = sim.run(m, o);
  REQUIRE(r.status == RunStatus::Halted);
  CHECK(r.cut_fired);
  CHECK(r.machine.same_data(golden.machine));
  CHECK(r.ledger.reexecuted == 1);
  CHECK(r.ledger.dead_e > 0.0);
  CHECK(r.ledger.restore_e > 0.0);
  CHECK(r.ledger.restore_t > 0.0);
  CHECK(r.ledger.restarts == 1);
}

TEST_CASE("a cut between WritePC and FlipParity repeats the instruction once") {
  const Machine m = adder_machine();
  const Simulator sim(DeviceParams::future_stt());
  const RunResult golden = sim.run(m, {});
  RunOptions o;
  o.cut = CutSpec{17, Phase::FlipParity, 0.0};
  const RunResult r = sim.run(m, o);
  REQUIRE(r.status == RunStatus::Halted);
  CHECK(r.machine.same_data(golden.machine));
  CHECK(r.attempts == golden.attempts + 1);
  CHECK(r.ledger.reexecuted == 1);
}

TEST_CASE("a cut before an instruction starts costs no dead energy") {
  const Machine m = adder_machine();
  const Simulator sim(DeviceParams::future_stt());
  RunOptions o;
  o.cut = CutSpec{10, Phase::Fetch, 0.0};
  const RunResult r = sim.run(m, o);
  REQUIRE(r.status == RunStatus::Halted);
  CHECK(r.ledger.dead_e == 0.0);
  CHECK(r.ledger.restore_e > 0.0);
  CHECK(r.ledger.reexecuted == 0);
}

TEST_CASE("runs are deterministic") {
  const Machine m = adder_machine();
  const Simulator sim(DeviceParams::future_stt());
  RunOptions o;
  o.trace = PowerTrace::square_wave(16e3, 0.25);
  const RunResult a = sim.run(m, o);
  const RunResult b = sim.run(m, o);
  CHECK(a.machine.snapshot() == b.machine.snapshot());
  CHECK(to_json(0.25, a.ledger) == to_json(0.25, b.ledger));
}

TEST_CASE("faults and timeouts are reported") {
  const Simulator sim(DeviceParams::future_stt());
  {
    // NAND without a preset under strict checking.
    std::vector<Instruction> prog{ActivateRangeInstr{0, 0, 0}, WriteBitInstr{0, 3, true},
                                  LogicInstr{GateName::Nand, 0, RowTriple::binary(0, 2, 3)}, HaltInstr{}};
    RunOptions o;
    o.strict_preset = true;
    CHECK(sim.run(machine_for(prog, Target::STT), o).status == RunStatus::Fault);
  }
  {
    const std::vector<Word64> words{Word64{0xC000000000000000ull}, kHaltWord};
    Machine m = Machine::create(std::make_shared<InstructionMemory>(words), 1);
    const RunResult r = sim.run(m, {});
    CHECK(r.status == RunStatus::Fault);
    CHECK(r.message.find("undecodable") != std::string::npos);
  }
  {
    std::vector<Instruction> prog{ActivateRangeInstr{0, 0, 0}};
    CHECK(sim.run(machine_for(prog, Target::STT), {}).status == RunStatus::Fault);  // runs off the end
  }
  {
    std::vector<Instruction> prog{ActivateRangeInstr{0, 0, 0}, WriteBitInstr{1, 0, true}, HaltInstr{}};
    CHECK(sim.run(machine_for(prog, Target::STT), {}).status == RunStatus::Fault);  // tile 1 missing
  }
  {
    RunOptions o;
    o.max_time = 1e-9;
    CHECK(sim.run(adder_machine(), o).status == RunStatus::Timeout);
  }
  {
    RunOptions o;
    o.trace = PowerTrace::explicit_intervals({{0.0, 1e-7}});
    CHECK(sim.run(adder_machine(), o).status == RunStatus::Timeout);
  }
}

TEST_CASE("instruction memory stores 16 words per row") {
  std::vector<Word64> words;
  for (int i = 0; i < 40; ++i) words.push_back(encode(WriteBitInstr{0, std::uint16_t(i), i % 2 == 1}));
  const InstructionMemory mem(words);
  CHECK(mem.size() == 40);
  for (std::uint32_t pc = 0; pc < 40; ++pc) CHECK(mem.fetch(pc) == words[pc]);
  CHECK_THROWS_AS(mem.fetch(40), ControllerError);
}
