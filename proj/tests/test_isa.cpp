#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "spinpim/isa.hpp"

using namespace spinpim;

namespace {

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

}  // namespace

TEST_CASE("hand-packed NAND word") {
  const Instruction i = LogicInstr{GateName::Nand, 3, RowTriple::binary(2, 4, 5)};
  const std::uint64_t want = (std::uint64_t{0x7} << 60) | (std::uint64_t{3} << 51) | (std::uint64_t{2} << 41) |
                             (std::uint64_t{4} << 31) | (std::uint64_t{5} << 21);
  CHECK(encode(i).bits == want);
  CHECK(decode(Word64{want}) == i);
}

TEST_CASE("single-column ACTCOL pads every field with the same column") {
  const auto w = encode(ActivateColumnsInstr::make(0, {9})).bits;
  CHECK((w >> 60) == 0xA);
  for (unsigned k = 0; k < 5; ++k) CHECK(((w >> (41 - 10 * k)) & 0x3FF) == 9);
  CHECK((w & 1u) == 0);
}

TEST_CASE("encode/decode and assemble/disassemble are identities on fuzzed programs") {
  std::mt19937_64 rng(1234);
  std::vector<Instruction> prog;
  for (int n = 0; n < 10000; ++n) prog.push_back(random_instruction(rng));
  for (const auto& i : prog) REQUIRE(decode(encode(i)) == i);
  CHECK(assemble(disassemble(prog)) == prog);
  CHECK(decode_program(encode_program(prog)) == prog);
}

TEST_CASE("random words either re-encode exactly or are rejected") {
  std::mt19937_64 rng(99);
  std::size_t accepted = 0;
  for (int n = 0; n < 200000; ++n) {
    // Bias toward plausible words: random opcode, sparse fields.
    std::uint64_t w = rng();
    if (n % 2) w &= (std::uint64_t{0xF} << 60) | (std::uint64_t{0x1FF} << 51) | (std::uint64_t{0x3FF} << 41) |
                   (rng() & (std::uint64_t{0xFFFFF} << 21));
    const auto d = try_decode(Word64{w});
    if (d) {
      ++accepted;
      REQUIRE(encode(*d).bits == w);
    }
  }
  CHECK(accepted > 0);
  for (std::uint64_t op : {0xCull, 0xDull, 0xEull}) CHECK_FALSE(try_decode(Word64{op << 60}));
  CHECK_FALSE(try_decode(Word64{kHaltWord.bits | 1}));
  CHECK(try_decode(kHaltWord).has_value());
}

TEST_CASE("specific malformed words are rejected") {
  const auto nand = encode(LogicInstr{GateName::Nand, 0, RowTriple::binary(2, 4, 5)}).bits;
  CHECK_FALSE(try_decode(Word64{nand | 1}));  // reserved bit
  // in2 = 3 breaks parity
  CHECK_FALSE(try_decode(Word64{(nand & ~(std::uint64_t{0x3FF} << 31)) | (std::uint64_t{3} << 31)}));
  const auto not_word = encode(LogicInstr{GateName::Not, 0, RowTriple::unary(2, 5)}).bits;
  CHECK_FALSE(try_decode(Word64{(not_word & ~(std::uint64_t{0x3FF} << 31)) | (std::uint64_t{4} << 31)}));
  const auto set0 = encode(WriteBitInstr{0, 7, false}).bits;
  CHECK_FALSE(try_decode(Word64{set0 | (std::uint64_t{1} << 40)}));
  const auto act = encode(ActivateColumnsInstr::make(0, {1, 2})).bits;
  // Pad with the first column instead of the last: 1 2 2 2 1 is unsorted.
  CHECK_FALSE(try_decode(Word64{(act & ~(std::uint64_t{0x3FF} << 1)) | (std::uint64_t{1} << 1)}));
  // 1 1 2 2 2 is sorted but not canonically padded.
  const auto act2 = encode(ActivateColumnsInstr::make(0, {1, 2})).bits;
  const std::uint64_t bad = (act2 & ~(std::uint64_t{0x3FF} << 31)) | (std::uint64_t{1} << 31);
  CHECK_FALSE(try_decode(Word64{bad}));
  CHECK_FALSE(try_decode(Word64{(std::uint64_t{0xB} << 60) | (std::uint64_t{5} << 41) | (std::uint64_t{4} << 31)}));
}

TEST_CASE("encode rejects field overflow") {
  CHECK_THROWS_AS(encode(ReadRowInstr{512, 0}), IsaError);
  CHECK_THROWS_AS(encode(WriteBitInstr{0, 1024, true}), IsaError);
  CHECK_THROWS_AS(encode(ActivateRangeInstr{0, 9, 3}), IsaError);
  CHECK_THROWS_AS(encode(ActivateColumnsInstr{0, {5, 3}}), IsaError);
}

TEST_CASE("assembler parses, diagnoses, and skips comments") {
  const auto prog = assemble("# header\n  NAND 3 2 4 5   # gate\n\nactcol 0 9\nSET1 1 8\nHALT\n");
  REQUIRE(prog.size() == 4);
  CHECK(prog[0] == Instruction{LogicInstr{GateName::Nand, 3, RowTriple::binary(2, 4, 5)}});
  CHECK(prog[1] == Instruction{ActivateColumnsInstr::make(0, {9})});
  CHECK(prog[2] == Instruction{WriteBitInstr{1, 8, true}});

  try {
    assemble("HALT\nNAND 3 2 3 5\n");
    FAIL("parity error not reported");
  } catch (const AssemblyError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 10);
  }
  CHECK_THROWS_AS(assemble("FOO 1 2"), AssemblyError);
  CHECK_THROWS_AS(assemble("NAND 1 2 4"), AssemblyError);
  CHECK_THROWS_AS(assemble("NOT 1 2 4 5"), AssemblyError);
  CHECK_THROWS_AS(assemble("SET0 600 1"), AssemblyError);
  CHECK_THROWS_AS(assemble("ACTCOL 0 1 2 3 4 5 6"), AssemblyError);
  CHECK_THROWS_AS(assemble("READROW 0 x"), AssemblyError);
  CHECK(assemble("NOT 1 2 5") == std::vector<Instruction>{LogicInstr{GateName::Not, 1, RowTriple::unary(2, 5)}});
}

TEST_CASE("binary program files are little-endian words") {
  const auto path = std::filesystem::temp_directory_path() / "spinpim_isa_test.bin";
  const std::vector<Word64> words{Word64{0x0102030405060708ull}, kHaltWord};
  write_program_binary(path, words);
  CHECK(std::filesystem::file_size(path) == 16);
  std::ifstream f(path, std::ios::binary);
  CHECK(f.get() == 0x08);
  CHECK(read_program_binary(path) == words);
  std::filesystem::remove(path);
}
