#include <doctest.h>

#include <bit>
#include <random>
#include <set>

#include "helpers.hpp"
#include "spinpim/compiler.hpp"

using namespace spinpim;
using spinpim::testing::run_program;

namespace {

constexpr Target kTargets[] = {Target::STT, Target::SHE};

// Runs a two-operand kernel over every (a, b) pair of `width` bits, 1024
// pairs per run, and checks the result against `oracle`.
template <typename Oracle>
void exhaustive(Kernel kernel, std::size_t width, Target target, Oracle oracle) {
  const Program p = build_kernel(kernel, width, target);
  const auto& a = p.layout.region("a").rows;
  const auto& b = p.layout.region("b").rows;
  const auto& res = p.layout.region("result").rows;
  const std::uint64_t n = std::uint64_t{1} << (2 * width);
  std::size_t mismatches = 0;
  for (std::uint64_t base = 0; base < n; base += kTileCols) {
    const auto r = run_program(p.instructions, target, [&](Machine& m) {
      for (std::size_t c = 0; c < kTileCols && base + c < n; ++c) {
        const std::uint64_t pair = base + c;
        preload_value(m.tiles[0], a, c, pair & ((1u << width) - 1));
        preload_value(m.tiles[0], b, c, pair >> width);
      }
    });
    REQUIRE(r.status == RunStatus::Halted);
    for (std::size_t c = 0; c < kTileCols && base + c < n; ++c) {
      const std::uint64_t pair = base + c;
      const std::uint64_t x = pair & ((1u << width) - 1);
      const std::uint64_t y = pair >> width;
      if (read_value(r.machine.tiles[0], res, c) != oracle(x, y)) ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

}  // namespace

TEST_CASE("full adder: nine NANDs, seven scratch rows, correct for all inputs") {
  for (Target t : kTargets) {
    CAPTURE(to_string(t));
    const Program p = build_kernel(Kernel::FullAdd, 1, t, 8);
    CHECK(p.count(Opcode::Nand) == 9);
    std::set<std::uint16_t> scratch;
    for (const auto& in : p.instructions) {
      if (const auto* l = std::get_if<LogicInstr>(&in); l && l->gate == GateName::Nand) {
        for (const auto& reg : p.layout.regions) {
          if (reg.role == RegionRole::Scratch &&
              std::find(reg.rows.begin(), reg.rows.end(), l->rows.out()) != reg.rows.end()) {
            scratch.insert(l->rows.out());
          }
        }
      }
    }
    CHECK(scratch.size() == 7);
    CHECK(p.count(Opcode::Set0) + p.count(Opcode::Set1) == (t == Target::STT ? 11u : 0u));
    CHECK(p.count(Opcode::Set0) == (t == Target::STT ? 9u : 0u));

    const auto r = run_program(p.instructions, t, [&](Machine& m) {
      for (std::size_t c = 0; c < 8; ++c) {
        m.tiles[0].set_cell(p.layout.region("a").rows[0], c, c & 1u);
        m.tiles[0].set_cell(p.layout.region("b").rows[0], c, (c >> 1) & 1u);
        m.tiles[0].set_cell(p.layout.region("cin").rows[0], c, (c >> 2) & 1u);
      }
    });
    REQUIRE(r.status == RunStatus::Halted);
    for (std::size_t c = 0; c < 8; ++c) {
      const auto total = std::popcount(c);
      CHECK(read_value(r.machine.tiles[0], p.layout.region("result").rows, c) == std::uint64_t(total));
    }
  }
}

TEST_CASE("full adder rejects aliasing that would clobber live inputs") {
  LayoutPlan plan;
  RowAllocator alloc(plan);
  const auto s = allocate_fulladd_scratch(alloc);
  Emitter e(Target::STT);
  CHECK_THROWS_AS(lower_fulladd(e, 2, 4, 6, 6, 8, s), CompilerError);   // sum == cin
  CHECK_THROWS_AS(lower_fulladd(e, 2, 4, 6, 10, 2, s), CompilerError);  // cout == a
  CHECK_THROWS_AS(lower_fulladd(e, 2, 4, 6, 10, 3, s), CompilerError);  // odd cout
  CHECK_THROWS_AS(lower_fulladd(e, s[3], 4, 6, 10, 12, s), CompilerError);
  FullAdderScratch dup = s;
  dup[1] = dup[0];
  CHECK_THROWS_AS(lower_fulladd(e, 200, 202, 204, 206, 208, dup), CompilerError);
  CHECK_NOTHROW(lower_fulladd(e, 200, 202, 204, 200, 208, s));  // sum may alias a
}

TEST_CASE("exhaustive 8-bit add matches the integer oracle") {
  for (Target t : kTargets) exhaustive(Kernel::Add, 8, t, [](auto a, auto b) { return a + b; });
}

TEST_CASE("exhaustive 8-bit subtract matches the integer oracle") {
  for (Target t : kTargets) {
    exhaustive(Kernel::Sub, 8, t, [](std::uint64_t a, std::uint64_t b) {
      return ((a - b) & 0xFFu) | (std::uint64_t(a >= b) << 8);
    });
  }
}

TEST_CASE("exhaustive 8-bit multiply matches the integer oracle") {
  for (Target t : kTargets) exhaustive(Kernel::Mult, 8, t, [](auto a, auto b) { return a * b; });
}

TEST_CASE("small widths add, subtract and multiply exhaustively") {
  for (std::size_t w : {1, 2, 3}) {
    CAPTURE(w);
    exhaustive(Kernel::Add, w, Target::STT, [](auto a, auto b) { return a + b; });
    exhaustive(Kernel::Mult, w, Target::SHE, [](auto a, auto b) { return a * b; });
    exhaustive(Kernel::Sub, w, Target::STT, [w](std::uint64_t a, std::uint64_t b) {
      return ((a - b) & ((1u << w) - 1)) | (std::uint64_t(a >= b) << w);
    });
  }
}

TEST_CASE("binary dot product equals popcount of the AND") {
  std::mt19937_64 rng(7);
  for (std::size_t n : {1, 2, 3, 5, 32}) {
    CAPTURE(n);
    for (Target t : kTargets) {
      const Program p = build_kernel(Kernel::BinaryDot, n, t);
      const auto& a = p.layout.region("a").rows;
      const auto& b = p.layout.region("b").rows;
      std::vector<std::uint64_t> xs(kTileCols), ys(kTileCols);
      for (std::size_t c = 0; c < kTileCols; ++c) {
        const std::uint64_t mask = n == 64 ? ~0ull : (1ull << n) - 1;
        xs[c] = rng() & mask;
        ys[c] = c % 3 == 0 ? xs[c] : c % 3 == 1 ? (~xs[c] & mask) : (rng() & mask);
      }
      const auto r = run_program(p.instructions, t, [&](Machine& m) {
        for (std::size_t c = 0; c < kTileCols; ++c) {
          preload_value(m.tiles[0], a, c, xs[c]);
          preload_value(m.tiles[0], b, c, ys[c]);
        }
      });
      REQUIRE(r.status == RunStatus::Halted);
      std::size_t bad = 0;
      for (std::size_t c = 0; c < kTileCols; ++c) {
        bad += read_value(r.machine.tiles[0], p.layout.region("result").rows, c) != std::uint64_t(std::popcount(xs[c] & ys[c]));
      }
      CHECK(bad == 0);
    }
  }
}

TEST_CASE("STT and SHE emissions differ only by presets") {
  for (Kernel k : {Kernel::FullAdd, Kernel::Add, Kernel::Sub, Kernel::Mult, Kernel::BinaryDot}) {
    CAPTURE(to_string(k));
    const Program stt = build_kernel(k, 6, Target::STT);
    const Program she = build_kernel(k, 6, Target::SHE);
    std::vector<Instruction> stripped;
    // Constant initialisation writes appear in both; presets are the SETs that
    // immediately precede a logic gate on its output row.
    for (std::size_t i = 0; i < stt.instructions.size(); ++i) {
      if (const auto* w = std::get_if<WriteBitInstr>(&stt.instructions[i]); w && i + 1 < stt.instructions.size()) {
        if (const auto* l = std::get_if<LogicInstr>(&stt.instructions[i + 1]); l && l->rows.out() == w->row) continue;
      }
      stripped.push_back(stt.instructions[i]);
    }
    CHECK(stripped == she.instructions);
    CHECK(she.instructions.size() < stt.instructions.size());
  }
}

TEST_CASE("generated STT code satisfies the preset discipline") {
  for (Kernel k : {Kernel::FullAdd, Kernel::Add, Kernel::Sub, Kernel::Mult, Kernel::BinaryDot}) {
    CAPTURE(to_string(k));
    const Program p = build_kernel(k, 8, Target::STT);
    CHECK(check_preset_discipline(p.instructions, Target::STT).empty());
    const Program she = build_kernel(k, 8, Target::SHE);
    CHECK_FALSE(check_preset_discipline(she.instructions, Target::STT).empty());
    CHECK(check_preset_discipline(she.instructions, Target::SHE).empty());
  }
}

TEST_CASE("preset checker flags an activation between preset and gate") {
  std::vector<Instruction> prog{
      WriteBitInstr{0, 5, false},
      ActivateRangeInstr{0, 0, 3},
      LogicInstr{GateName::Nand, 0, RowTriple::binary(0, 2, 5)},
      HaltInstr{},
  };
  const auto problems = check_preset_discipline(prog, Target::STT);
  REQUIRE(problems.size() == 1);
  CHECK(problems[0].find("pc 2") == 0);
  prog[0] = WriteBitInstr{0, 5, true};
  std::swap(prog[0], prog[1]);
  CHECK(check_preset_discipline(prog, Target::STT).size() == 1);  // wrong preset value
}

TEST_CASE("programs assemble, encode and end with HALT") {
  for (Kernel k : {Kernel::Add, Kernel::Mult}) {
    const Program p = build_kernel(k, 4, Target::STT);
    REQUIRE(!p.instructions.empty());
    CHECK(std::holds_alternative<HaltInstr>(p.instructions.back()));
    CHECK(decode_program(encode_program(p.instructions)) == p.instructions);
    CHECK(assemble(disassemble(p.instructions)) == p.instructions);
    const auto meta = p.metadata_json();
    CHECK(meta["instructions"] == p.instructions.size());
    CHECK(LayoutPlan::from_json(nlohmann::json::parse(p.layout.to_json().dump())).regions.size() ==
          p.layout.regions.size());
  }
}

TEST_CASE("layout allocation keeps parity and reports overflow") {
  LayoutPlan plan;
  RowAllocator alloc(plan);
  const auto even = alloc.take("e", RegionRole::Operand, 3);
  const auto odd = alloc.take("o", RegionRole::Scratch, 2, Parity::Odd);
  CHECK(even == std::vector<std::uint16_t>{0, 2, 4});
  CHECK(odd == std::vector<std::uint16_t>{1, 3});
  CHECK(alloc.free_rows(Parity::Even) == 509);
  CHECK_THROWS_AS(alloc.take("big", RegionRole::Operand, 510), CompilerError);
  CHECK_NOTHROW(plan.validate());
  plan.regions.push_back({"clash", RegionRole::Result, {2}});
  CHECK_THROWS_AS(plan.validate(), CompilerError);
}
