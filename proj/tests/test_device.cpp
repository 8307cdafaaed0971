#include <doctest.h>

#include <array>
#include <vector>

#include "spinpim/device.hpp"

using namespace spinpim;

namespace {

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

// Independent series-parallel oracle for two-input NAND: inputs in parallel,
// output MTJ at P (preset 0), three access transistors in series.
std::array<double, 2> nand_window_by_hand(double rp, double rap, double rt, double i) {
  const double par_01 = rp * rap / (rp + rap);
  const double par_11 = rap / 2.0;
  const double par_00 = rp / 2.0;
  const double worst_switch = std::max(par_01, par_00) + rp + 3 * rt;
  const double hold = par_11 + rp + 3 * rt;
  return {i * worst_switch, i * hold};
}

std::vector<MtjState> inputs_for(const GateKind& k, bool a, bool b) {
  if (k.arity == 1) return {state_of(a)};
  return {state_of(a), state_of(b)};
}

}  // namespace

TEST_CASE("presets carry the reference device parameters") {
  const auto m = DeviceParams::modern_stt();
  CHECK(m.r_p == doctest::Approx(3.15e3));
  CHECK(m.r_ap == doctest::Approx(7.34e3));
  CHECK(m.t_switch == doctest::Approx(3e-9));
  CHECK(m.i_switch == doctest::Approx(40e-6));
  const auto f = DeviceParams::future_stt();
  CHECK(f.r_p == doctest::Approx(7.34e3));
  CHECK(f.r_ap == doctest::Approx(76.39e3));
  CHECK(f.t_switch == doctest::Approx(1e-9));
  CHECK(f.i_switch == doctest::Approx(3e-6));
  CHECK(DeviceParams::preset("future_she").is_she());
  CHECK_THROWS_AS(DeviceParams::preset("nope"), DeviceError);
}

TEST_CASE("validate rejects broken parameter sets") {
  auto p = DeviceParams::future_stt();
  p.r_ap = p.r_p * 0.5;
  CHECK_THROWS_AS(p.validate(), DeviceError);
  p = DeviceParams::future_she();
  p.r_she_channel = 0;
  CHECK_THROWS_AS(p.validate(), DeviceError);
}

TEST_CASE("every gate matches its Boolean function for STT and SHE") {
  for (GateName g : kAllGates) {
    const GateKind k = gate_semantics(g);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        if (k.arity == 1 && b != a) continue;
        const auto in = inputs_for(k, a, b);
        const bool want = boolean_oracle(g, a, b);
        CHECK(logic_value(apply_gate_stt(in, state_of(k.preset), k, 1.0)) == want);
        for (int stale = 0; stale < 2; ++stale) {
          CHECK(logic_value(apply_gate_she(in, state_of(stale), k)) == want);
        }
      }
    }
  }
}

TEST_CASE("an interrupted pulse followed by a full pulse equals one full pulse") {
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
            CHECK(apply_gate_stt(in, partial, k, 1.0, model) == golden);
          }
        }
      }
    }
  }
}

TEST_CASE("gate arity is checked") {
  const std::array<MtjState, 2> two{MtjState::P, MtjState::P};
  CHECK_THROWS_AS(apply_gate_stt(std::span(two).first(1), MtjState::P, gate_semantics(GateName::Nand), 1.0),
                  DeviceError);
  CHECK_THROWS_AS(apply_gate_she(two, MtjState::P, gate_semantics(GateName::Not)), DeviceError);
}

TEST_CASE("NAND window matches the hand series-parallel values") {
  auto f = DeviceParams::future_stt();
  f.r_transistor = 0;
  auto w = solve_drive_voltage(gate_semantics(GateName::Nand), f);
  CHECK(w.feasible);
  CHECK(w.v_min == doctest::Approx(42.1e-3).epsilon(0.01));
  CHECK(w.v_max == doctest::Approx(136.6e-3).epsilon(0.01));

  auto m = DeviceParams::modern_stt();
  m.r_transistor = 0;
  w = solve_drive_voltage(gate_semantics(GateName::Nand), m);
  CHECK(w.feasible);
  CHECK(w.v_min == doctest::Approx(214.2e-3).epsilon(0.01));
  CHECK(w.v_max == doctest::Approx(272.8e-3).epsilon(0.01));

  for (const auto& p : {DeviceParams::future_stt(), DeviceParams::modern_stt()}) {
    const auto hand = nand_window_by_hand(p.r_p, p.r_ap, p.r_transistor, p.i_switch);
    const auto got = solve_drive_voltage(gate_semantics(GateName::Nand), p);
    CHECK(got.v_min == doctest::Approx(hand[0]).epsilon(1e-9));
    CHECK(got.v_max == doctest::Approx(hand[1]).epsilon(1e-9));
  }
}

TEST_CASE("all gates are feasible on the future presets, none on a degenerate device") {
  for (const auto& p : {DeviceParams::future_stt(), DeviceParams::future_she()}) {
    for (GateName g : kAllGates) CHECK(solve_drive_voltage(gate_semantics(g), p).feasible);
  }
  auto d = DeviceParams::future_stt();
  d.r_ap = d.r_p;
  for (GateName g : kAllGates) CHECK_FALSE(solve_drive_voltage(gate_semantics(g), d).feasible);
}

TEST_CASE("op_cost follows the energy model") {
  const auto p = DeviceParams::future_stt();
  CostConfig cfg;
  cfg.peripheral_share = 0.0;
  const auto wr = op_cost(OpClass::WriteBit, p, cfg);
  CHECK(wr.energy == doctest::Approx(p.i_switch * p.i_switch * (p.r_ap + p.r_transistor) * p.t_switch));
  CHECK(wr.latency == doctest::Approx(p.t_switch + cfg.t_setup));

  const auto rd = op_cost(OpClass::ReadRow, p, cfg);
  CHECK(op_cost(OpClass::Fetch, p, cfg).energy == doctest::Approx(64 * rd.energy));
  CHECK(op_cost(OpClass::Activate, p, cfg).energy == doctest::Approx(10 * wr.energy));

  cfg.peripheral_share = 0.5;
  CHECK(op_cost(OpClass::WriteBit, p, cfg).energy == doctest::Approx(2 * wr.energy));
  cfg.backup_energy_per_bit = 1e-15;
  CHECK(op_cost(OpClass::BackupWrite, p, cfg).energy == doctest::Approx(1e-15));
  cfg.peripheral_share = 1.0;
  CHECK_THROWS_AS(op_cost(OpClass::WriteBit, p, cfg), DeviceError);

  const auto logic = op_cost(OpClass::Logic, p, CostConfig{}, GateName::Nand);
  CHECK(logic.energy > 0);
  CHECK(logic.switch_energy == 0);
  CHECK(op_cost(OpClass::Logic, DeviceParams::future_she(), CostConfig{}).switch_energy > 0);

  auto d = p;
  d.r_ap = d.r_p;
  CHECK_THROWS_AS(op_cost(OpClass::Logic, d, CostConfig{}), DeviceError);
}
