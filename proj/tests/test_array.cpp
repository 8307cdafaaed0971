#include <doctest.h>

#include <random>
#include <vector>

#include "spinpim/array.hpp"

using namespace spinpim;

namespace {

void fill_random(Tile& t, std::mt19937_64& rng, std::size_t rows = 8) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < kTileCols; ++c) t.set_cell(r, c, rng() & 1u);
  }
}

}  // namespace

TEST_CASE("RowTriple enforces the parity rule") {
  CHECK_NOTHROW(RowTriple::binary(2, 4, 5));
  CHECK_THROWS_AS(RowTriple::binary(2, 3, 5), ArrayError);
  CHECK_THROWS_AS(RowTriple::binary(2, 4, 6), ArrayError);
  CHECK_THROWS_AS(RowTriple::binary(2, 4, 1025), ArrayError);
  CHECK(RowTriple::unary(7, 8).in2() == 7);
}

TEST_CASE("activation replaces the latch and collapses duplicates") {
  Tile t;
  const std::vector<std::uint16_t> a{3, 7};
  t.activate_columns(a);
  CHECK(t.active_count() == 2);
  CHECK(t.is_active(3));
  CHECK(t.is_active(7));
  const std::vector<std::uint16_t> dup{3, 3, 3, 3, 3};
  t.activate_columns(dup);
  CHECK(t.active_count() == 1);
  CHECK_FALSE(t.is_active(7));
  const auto before = t.active_mask();
  t.activate_columns(dup);
  CHECK(t.active_mask() == before);
  CHECK_THROWS_AS(t.activate_columns(std::vector<std::uint16_t>{1, 2, 3, 4, 5, 6}), ArrayError);
  CHECK_THROWS_AS(t.activate_columns(std::vector<std::uint16_t>{1024}), ArrayError);
  t.activate_range(10, 700);
  CHECK(t.active_count() == 691);
  CHECK_THROWS_AS(t.activate_range(5, 4), ArrayError);
}

TEST_CASE("NAND acts per column and only on active columns") {
  Tile t;
  t.set_cell(0, 0, false);
  t.set_cell(2, 0, true);
  t.set_cell(0, 1, true);
  t.set_cell(2, 1, true);
  t.set_cell(0, 2, false);  // inactive column
  const auto nand = gate_semantics(GateName::Nand);
  CHECK(t.logic_op(nand, RowTriple::binary(0, 2, 1)) == 0);  // empty latch
  t.activate_columns(std::vector<std::uint16_t>{0, 1});
  t.logic_op(nand, RowTriple::binary(0, 2, 1));
  CHECK(t.cell(1, 0));
  CHECK_FALSE(t.cell(1, 1));
  CHECK_FALSE(t.cell(1, 2));
}

TEST_CASE("array gates match the device model column by column") {
  std::mt19937_64 rng(11);
  for (auto variant : {CellVariant::STT, CellVariant::SHE}) {
    for (GateName g : kAllGates) {
      const GateKind k = gate_semantics(g);
      Tile t(variant);
      fill_random(t, rng);
      t.activate_range(0, 1023);
      if (variant == CellVariant::STT) t.write_bit(5, k.preset);
      const Tile before = t;
      const auto rows = k.arity == 1 ? RowTriple::unary(2, 5) : RowTriple::binary(2, 4, 5);
      t.logic_op(k, rows);
      for (std::size_t c = 0; c < kTileCols; ++c) {
        std::vector<MtjState> in{before.state(2, c)};
        if (k.arity == 2) in.push_back(before.state(4, c));
        const MtjState want = variant == CellVariant::STT ? apply_gate_stt(in, before.state(5, c), k, 1.0)
                                                          : apply_gate_she(in, before.state(5, c), k);
        REQUIRE(t.state(5, c) == want);
      }
    }
  }
}

TEST_CASE("partial pulse then a full pulse equals one full pulse on a tile") {
  std::mt19937_64 rng(5);
  for (GateName g : kAllGates) {
    const GateKind k = gate_semantics(g);
    Tile t;
    fill_random(t, rng);
    t.activate_range(0, 1023);
    t.write_bit(3, k.preset);
    const auto rows = k.arity == 1 ? RowTriple::unary(0, 3) : RowTriple::binary(0, 2, 3);
    Tile golden = t;
    golden.logic_op(k, rows);
    for (double f : {0.0, 0.25, 0.4, 0.5, 0.75}) {
      for (auto model : {CompletionModel::Deterministic, CompletionModel::EarlySwitch}) {
        Tile u = t;
        u.logic_op(k, rows, f, {model, false});
        u.logic_op(k, rows, 1.0, {model, false});
        CHECK(u.same_cells(golden));
      }
    }
  }
}

TEST_CASE("strict preset mode flags a stale STT output") {
  Tile t;
  t.activate_columns(std::vector<std::uint16_t>{9});
  t.set_cell(1, 9, true);
  const LogicOptions strict{CompletionModel::Deterministic, true};
  CHECK_THROWS_AS(t.logic_op(gate_semantics(GateName::Nand), RowTriple::binary(0, 2, 1), 1.0, strict), ArrayError);
}

TEST_CASE("writes are masked and idempotent, reads are full and non-destructive") {
  std::mt19937_64 rng(3);
  Tile t;
  fill_random(t, rng);
  t.activate_columns(std::vector<std::uint16_t>{2});
  t.write_bit(5, false);
  CHECK_FALSE(t.cell(5, 2));
  const Tile once = t;
  t.write_bit(5, false);
  CHECK(t.same_cells(once));

  t.clear_latch();
  t.write_bit(5, true);
  CHECK(t.same_cells(once));

  const RowBuffer buf = t.read_row(3);
  CHECK(t.same_cells(once));
  for (std::size_t c = 0; c < kTileCols; ++c) CHECK(buf.get(c) == t.cell(3, c));

  Tile u;
  u.activate_range(0, 1023);
  u.write_row(7, buf);
  CHECK(u.read_row(7) == buf);

  Tile v;
  v.activate_columns(std::vector<std::uint16_t>{0});
  RowBuffer ones;
  ones.bits.fill(~std::uint64_t{0});
  CHECK(v.write_row(1, ones) == 1);
  CHECK(v.cell(1, 0));
  CHECK_FALSE(v.cell(1, 1));
}

TEST_CASE("inactive columns are untouched by every operation") {
  std::mt19937_64 rng(21);
  Tile t;
  fill_random(t, rng);
  const std::vector<std::uint16_t> cols{4, 64, 65, 500, 1023};
  t.activate_columns(cols);
  Tile u = t;
  u.logic_op(gate_semantics(GateName::Or), RowTriple::binary(0, 2, 7));
  u.write_bit(4, true);
  u.write_row(6, t.read_row(1));
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < kTileCols; ++c) {
      if (!t.is_active(c)) REQUIRE(u.cell(r, c) == t.cell(r, c));
    }
  }
}

TEST_CASE("snapshots round-trip and locate the first difference") {
  std::mt19937_64 rng(9);
  Tile t;
  fill_random(t, rng, 32);
  const auto bytes = t.snapshot();
  CHECK(bytes.size() == 131072);
  const Tile back = Tile::from_snapshot(bytes);
  CHECK(back.same_cells(t));
  Tile u = t;
  u.set_cell(17, 300, !u.cell(17, 300));
  const auto diff = t.first_difference(u);
  REQUIRE(diff.has_value());
  CHECK(diff->first == 17);
  CHECK(diff->second == 300);
  CHECK_THROWS_AS(Tile::from_snapshot(std::span(bytes).first(10)), ArrayError);
}
