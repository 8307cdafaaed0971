#include <doctest.h>

#include "helpers.hpp"
#include "spinpim/compiler.hpp"
#include "spinpim/crash.hpp"

using namespace spinpim;
using spinpim::testing::machine_for;

namespace {

Machine preload_fulladd(const Program& p, Target t) {
  Machine m = machine_for(p.instructions, t);
  for (std::size_t c = 0; c < 8; ++c) {
    m.tiles[0].set_cell(p.layout.region("a").rows[0], c, c & 1u);
    m.tiles[0].set_cell(p.layout.region("b").rows[0], c, (c >> 1) & 1u);
    m.tiles[0].set_cell(p.layout.region("cin").rows[0], c, (c >> 2) & 1u);
  }
  return m;
}

}  // namespace

TEST_CASE("cut enumeration covers every phase") {
  const std::vector<Instruction> prog{ActivateRangeInstr{0, 0, 1}, WriteBitInstr{0, 0, true}, HaltInstr{}};
  // 5 + 4 + 1 phases, plus one end-of-instruction cut each.
  CHECK(enumerate_cuts(prog, CutGranularity::Boundaries).size() == 10 + 3);
  CHECK(enumerate_cuts(prog, CutGranularity::Full).size() == 40 + 3);
  CHECK(enumerate_cuts(prog, CutGranularity::Boundaries, PhaseOrder::StoreActFirst, BackupScheme::SinglePc).size() ==
        4 + 3 + 1 + 3);
}

TEST_CASE("full adder survives every cut on both targets and completion models") {
  for (Target t : {Target::STT, Target::SHE}) {
    const Program p = build_kernel(Kernel::FullAdd, 1, t, 8);
    const Machine m = preload_fulladd(p, t);
    const Simulator sim(spinpim::testing::device_for(t));
    for (CompletionModel cm : {CompletionModel::Deterministic, CompletionModel::EarlySwitch}) {
      RunOptions o;
      o.completion = cm;
      o.strict_preset = t == Target::STT;
      const auto cuts = enumerate_cuts(p.instructions, CutGranularity::Full);
      const SweepReport rep = crash_sweep(sim, m, o, cuts, 1);
      CHECK(rep.all_passed());
      CHECK(rep.max_extra_attempts <= 1);
      if (const auto* f = rep.first_failure()) FAIL_CHECK(to_string(f->cut) << ": " << f->message);
    }
  }
}

TEST_CASE("sweep results do not depend on the thread count") {
  const Program p = build_kernel(Kernel::Add, 3, Target::STT, 64);
  Machine m = machine_for(p.instructions, Target::STT);
  for (std::size_t c = 0; c < 64; ++c) {
    preload_value(m.tiles[0], p.layout.region("a").rows, c, c % 8);
    preload_value(m.tiles[0], p.layout.region("b").rows, c, c / 8);
  }
  const Simulator sim(DeviceParams::future_stt());
  RunOptions o;
  o.trace = PowerTrace::square_wave(16e3, 0.5);
  const auto cuts = enumerate_cuts(p.instructions, CutGranularity::Boundaries);
  const SweepReport one = crash_sweep(sim, m, o, cuts, 1);
  const SweepReport many = crash_sweep(sim, m, o, cuts, 3);
  CHECK(one.all_passed());
  REQUIRE(one.outcomes.size() == many.outcomes.size());
  for (std::size_t i = 0; i < one.outcomes.size(); ++i) {
    CHECK(one.outcomes[i].cut == many.outcomes[i].cut);
    CHECK(one.outcomes[i].passed == many.outcomes[i].passed);
  }
}

TEST_CASE("storing the activation after the parity flip is detected") {
  // Two activations; the second must steer the final SET to column 1.
  const std::vector<Instruction> prog{
      ActivateColumnsInstr::make(0, {0}), WriteBitInstr{0, 0, false},
      ActivateColumnsInstr::make(0, {1}), WriteBitInstr{0, 0, true}, HaltInstr{},
  };
  const Simulator sim(DeviceParams::future_stt());
  const Machine m = machine_for(prog, Target::STT);
  RunOptions unsafe;
  unsafe.order = PhaseOrder::StoreActLast;
  const SweepReport bad =
      crash_sweep(sim, m, unsafe, enumerate_cuts(prog, CutGranularity::Full, PhaseOrder::StoreActLast), 1);
  REQUIRE_FALSE(bad.all_passed());
  const CutOutcome* f = bad.first_failure();
  REQUIRE(f->divergence);
  CHECK(f->divergence->row == 0);
  CHECK(f->cut.phase == Phase::StoreAct);

  const SweepReport good = crash_sweep(sim, m, {}, enumerate_cuts(prog, CutGranularity::Full), 1);
  CHECK(good.all_passed());
}

TEST_CASE("a single in-place PC register is torn by a cut") {
  const Program p = build_kernel(Kernel::Mult, 8, Target::STT, 4);
  REQUIRE(p.instructions.size() > 257);
  Machine m = machine_for(p.instructions, Target::STT);
  for (std::size_t c = 0; c < 4; ++c) {
    preload_value(m.tiles[0], p.layout.region("a").rows, c, 200 + c);
    preload_value(m.tiles[0], p.layout.region("b").rows, c, 100 * c);
  }
  const Simulator sim(DeviceParams::future_stt());
  // PC 255 -> 256: a quarter of the write leaves the low byte 0 and the high bits stale.
  const std::vector<CutSpec> cut{{255, Phase::WritePC, 0.25}};
  RunOptions single;
  single.scheme = BackupScheme::SinglePc;
  const SweepReport bad = crash_sweep(sim, m, single, cut, 1);
  CHECK_FALSE(bad.all_passed());
  const SweepReport good = crash_sweep(sim, m, {}, cut, 1);
  CHECK(good.all_passed());
}
