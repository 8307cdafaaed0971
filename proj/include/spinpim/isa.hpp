#pragma once

// Instruction set, 64-bit binary encoding, and assembly text format.
//
// Word layout (bit 63 is the MSB):
//   [63:60] opcode   [59:51] tile
//   logic       [50:41] in1  [40:31] in2 (= in1 for NOT/COPY)  [30:21] out
//   SET0/SET1   [50:41] row  [40] value
//   READ/WRITE  [50:41] row
//   ACTCOL      five column fields [50:41] [40:31] [30:21] [20:11] [10:1]
//   ACTRANGE    [50:41] start  [40:31] end
// Every bit not named above must be zero.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spinpim/array.hpp"
#include "spinpim/device.hpp"

namespace spinpim {

class IsaError : public Error {
 public:
  using Error::Error;
};

class AssemblyError : public IsaError {
 public:
  AssemblyError(std::size_t line, std::size_t column, const std::string& message);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

enum class Opcode : std::uint8_t {
  ReadRow = 0x0,
  WriteRow = 0x1,
  Set0 = 0x2,
  Set1 = 0x3,
  Not = 0x4,
  Copy = 0x5,
  And = 0x6,
  Nand = 0x7,
  Or = 0x8,
  Nor = 0x9,
  ActCol = 0xA,
  ActRange = 0xB,
  Halt = 0xF,
};

struct Word64 {
  std::uint64_t bits = 0;
  friend auto operator<=>(const Word64&, const Word64&) = default;
};

struct LogicInstr {
  GateName gate = GateName::Nand;
  std::uint16_t tile = 0;
  RowTriple rows = RowTriple::binary(0, 0, 1);
  friend bool operator==(const LogicInstr&, const LogicInstr&) = default;
};

struct WriteBitInstr {
  std::uint16_t tile = 0;
  std::uint16_t row = 0;
  bool value = false;
  friend bool operator==(const WriteBitInstr&, const WriteBitInstr&) = default;
};

struct ReadRowInstr {
  std::uint16_t tile = 0;
  std::uint16_t row = 0;
  friend bool operator==(const ReadRowInstr&, const ReadRowInstr&) = default;
};

struct WriteRowInstr {
  std::uint16_t tile = 0;
  std::uint16_t row = 0;
  friend bool operator==(const WriteRowInstr&, const WriteRowInstr&) = default;
};

/// Columns are kept canonical: sorted, unique, 1..5 entries.
struct ActivateColumnsInstr {
  std::uint16_t tile = 0;
  std::vector<std::uint16_t> cols;

  static ActivateColumnsInstr make(std::uint16_t tile, std::vector<std::uint16_t> cols);
  friend bool operator==(const ActivateColumnsInstr&, const ActivateColumnsInstr&) = default;
};

struct ActivateRangeInstr {
  std::uint16_t tile = 0;
  std::uint16_t start = 0;
  std::uint16_t end = 0;
  friend bool operator==(const ActivateRangeInstr&, const ActivateRangeInstr&) = default;
};

struct HaltInstr {
  friend bool operator==(const HaltInstr&, const HaltInstr&) = default;
};

using Instruction = std::variant<LogicInstr, WriteBitInstr, ReadRowInstr, WriteRowInstr,
                                 ActivateColumnsInstr, ActivateRangeInstr, HaltInstr>;

inline constexpr Word64 kHaltWord{std::uint64_t{0xF} << 60};

Opcode opcode_of(const Instruction& instr);
std::string_view mnemonic(Opcode op);
bool is_activation(const Instruction& instr);
/// Data tile addressed by the instruction; nullopt for HALT.
std::optional<std::uint16_t> tile_of(const Instruction& instr);

/// Throws IsaError on field overflow or a parity violation.
Word64 encode(const Instruction& instr);
/// Throws IsaError for reserved opcodes and non-canonical words.
Instruction decode(Word64 word);
std::optional<Instruction> try_decode(Word64 word) noexcept;

std::vector<Word64> encode_program(std::span<const Instruction> program);
std::vector<Instruction> decode_program(std::span<const Word64> words);

std::string to_assembly(const Instruction& instr);
/// One instruction per line, `MNEMONIC tile args...`, `#` starts a comment.
std::vector<Instruction> assemble(std::string_view text);
std::string disassemble(std::span<const Instruction> program);

/// Binary program files are little-endian sequences of 64-bit words.
void write_program_binary(const std::filesystem::path& path, std::span<const Word64> words);
std::vector<Word64> read_program_binary(const std::filesystem::path& path);

/// Loads `.bin` files as binary and anything else as assembly text.
std::vector<Instruction> load_program(const std::filesystem::path& path);

}  // namespace spinpim
