#include "spinpim/isa.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace spinpim {

namespace {

constexpr unsigned kOpShift = 60;
constexpr unsigned kTileShift = 51;
constexpr unsigned kF1 = 41;
constexpr unsigned kF2 = 31;
constexpr unsigned kF3 = 21;
constexpr std::uint64_t kMask10 = 0x3FF;
constexpr std::uint64_t kMask9 = 0x1FF;

std::uint64_t field(std::uint64_t w, unsigned shift, std::uint64_t mask) { return (w >> shift) & mask; }

void check_tile(std::uint16_t tile) {
  if (tile > kMask9) throw IsaError(fmt::format("tile {} does not fit 9 bits", tile));
}

void check_row_field(std::uint16_t v, std::string_view what) {
  if (v > kMask10) throw IsaError(fmt::format("{} {} does not fit 10 bits", what, v));
}

std::uint64_t head(Opcode op, std::uint16_t tile) {
  check_tile(tile);
  return (std::uint64_t(op) << kOpShift) | (std::uint64_t(tile) << kTileShift);
}

Opcode gate_opcode(GateName g) {
  switch (g) {
    case GateName::Not: return Opcode::Not;
    case GateName::Copy: return Opcode::Copy;
    case GateName::And: return Opcode::And;
    case GateName::Nand: return Opcode::Nand;
    case GateName::Or: return Opcode::Or;
    case GateName::Nor: return Opcode::Nor;
  }
  throw IsaError("unknown gate");
}

GateName opcode_gate(Opcode op) {
  switch (op) {
    case Opcode::Not: return GateName::Not;
    case Opcode::Copy: return GateName::Copy;
    case Opcode::And: return GateName::And;
    case Opcode::Nand: return GateName::Nand;
    case Opcode::Or: return GateName::Or;
    case Opcode::Nor: return GateName::Nor;
    default: throw IsaError("not a logic opcode");
  }
}

bool is_unary(GateName g) { return g == GateName::Not || g == GateName::Copy; }

void reject(Word64 w, std::string_view why) {
  throw IsaError(fmt::format("invalid word {:#018x}: {}", w.bits, why));
}

template <class... Fs>
struct Overload : Fs... {
  using Fs::operator()...;
};

}  // namespace

AssemblyError::AssemblyError(std::size_t line, std::size_t column, const std::string& message)
    : IsaError(fmt::format("{}:{}: {}", line, column, message)), line_(line), column_(column) {}

ActivateColumnsInstr ActivateColumnsInstr::make(std::uint16_t tile, std::vector<std::uint16_t> cols) {
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  if (cols.empty() || cols.size() > 5) {
    throw IsaError(fmt::format("ACTCOL needs 1 to 5 distinct columns, got {}", cols.size()));
  }
  return {tile, std::move(cols)};
}

Opcode opcode_of(const Instruction& instr) {
  return std::visit(
      Overload{
          [](const LogicInstr& i) { return gate_opcode(i.gate); },
          [](const WriteBitInstr& i) { return i.value ? Opcode::Set1 : Opcode::Set0; },
          [](const ReadRowInstr&) { return Opcode::ReadRow; },
          [](const WriteRowInstr&) { return Opcode::WriteRow; },
          [](const ActivateColumnsInstr&) { return Opcode::ActCol; },
          [](const ActivateRangeInstr&) { return Opcode::ActRange; },
          [](const HaltInstr&) { return Opcode::Halt; },
      },
      instr);
}

std::string_view mnemonic(Opcode op) {
  switch (op) {
    case Opcode::ReadRow: return "READROW";
    case Opcode::WriteRow: return "WRITEROW";
    case Opcode::Set0: return "SET0";
    case Opcode::Set1: return "SET1";
    case Opcode::Not: return "NOT";
    case Opcode::Copy: return "COPY";
    case Opcode::And: return "AND";
    case Opcode::Nand: return "NAND";
    case Opcode::Or: return "OR";
    case Opcode::Nor: return "NOR";
    case Opcode::ActCol: return "ACTCOL";
    case Opcode::ActRange: return "ACTRANGE";
    case Opcode::Halt: return "HALT";
  }
  return "?";
}

bool is_activation(const Instruction& instr) {
  return std::holds_alternative<ActivateColumnsInstr>(instr) ||
         std::holds_alternative<ActivateRangeInstr>(instr);
}

std::optional<std::uint16_t> tile_of(const Instruction& instr) {
  return std::visit(Overload{
                        [](const HaltInstr&) -> std::optional<std::uint16_t> { return std::nullopt; },
                        [](const auto& i) -> std::optional<std::uint16_t> { return i.tile; },
                    },
                    instr);
}

Word64 encode(const Instruction& instr) {
  const Opcode op = opcode_of(instr);
  const std::uint64_t bits = std::visit(
      Overload{
          [&](const LogicInstr& i) {
            const auto& r = i.rows;
            if (!RowTriple::valid(r.in1(), r.in2(), r.out())) throw IsaError("row parity violation");
            if (is_unary(i.gate) && r.in1() != r.in2()) {
              throw IsaError(fmt::format("{} takes one input row", to_string(i.gate)));
            }
            return head(op, i.tile) | (std::uint64_t(r.in1()) << kF1) | (std::uint64_t(r.in2()) << kF2) |
                   (std::uint64_t(r.out()) << kF3);
          },
          [&](const WriteBitInstr& i) {
            check_row_field(i.row, "row");
            return head(op, i.tile) | (std::uint64_t(i.row) << kF1) | (std::uint64_t(i.value) << 40);
          },
          [&](const ReadRowInstr& i) {
            check_row_field(i.row, "row");
            return head(op, i.tile) | (std::uint64_t(i.row) << kF1);
          },
          [&](const WriteRowInstr& i) {
            check_row_field(i.row, "row");
            return head(op, i.tile) | (std::uint64_t(i.row) << kF1);
          },
          [&](const ActivateColumnsInstr& i) {
            const auto canon = ActivateColumnsInstr::make(i.tile, i.cols);
            if (canon.cols != i.cols) throw IsaError("ACTCOL columns must be sorted and distinct");
            std::uint64_t w = head(op, i.tile);
            for (std::size_t k = 0; k < 5; ++k) {
              const std::uint16_t c = i.cols[std::min(k, i.cols.size() - 1)];
              check_row_field(c, "column");
              w |= std::uint64_t(c) << (kF1 - 10 * k);
            }
            return w;
          },
          [&](const ActivateRangeInstr& i) {
            check_row_field(i.start, "column");
            check_row_field(i.end, "column");
            if (i.start > i.end) throw IsaError("ACTRANGE start exceeds end");
            return head(op, i.tile) | (std::uint64_t(i.start) << kF1) | (std::uint64_t(i.end) << kF2);
          },
          [&](const HaltInstr&) { return kHaltWord.bits; },
      },
      instr);
  return Word64{bits};
}

Instruction decode(Word64 word) {
  const std::uint64_t w = word.bits;
  const auto op = static_cast<Opcode>(field(w, kOpShift, 0xF));
  const auto tile = static_cast<std::uint16_t>(field(w, kTileShift, kMask9));
  const auto f1 = static_cast<std::uint16_t>(field(w, kF1, kMask10));
  const auto f2 = static_cast<std::uint16_t>(field(w, kF2, kMask10));
  const auto f3 = static_cast<std::uint16_t>(field(w, kF3, kMask10));
  const auto low = [&](unsigned below) { return w & ((std::uint64_t{1} << below) - 1); };

  switch (op) {
    case Opcode::ReadRow:
    case Opcode::WriteRow:
      if (low(kF1) != 0) reject(word, "nonzero reserved bits");
      if (op == Opcode::ReadRow) return ReadRowInstr{tile, f1};
      return WriteRowInstr{tile, f1};
    case Opcode::Set0:
    case Opcode::Set1: {
      if (low(40) != 0) reject(word, "nonzero reserved bits");
      const bool value = (w >> 40) & 1u;
      if (value != (op == Opcode::Set1)) reject(word, "value bit disagrees with opcode");
      return WriteBitInstr{tile, f1, value};
    }
    case Opcode::Not:
    case Opcode::Copy:
    case Opcode::And:
    case Opcode::Nand:
    case Opcode::Or:
    case Opcode::Nor: {
      if (low(kF3) != 0) reject(word, "nonzero reserved bits");
      const GateName g = opcode_gate(op);
      if (is_unary(g) && f1 != f2) reject(word, "unary gate with distinct input rows");
      if (!RowTriple::valid(f1, f2, f3)) reject(word, "row parity violation");
      return LogicInstr{g, tile, RowTriple::binary(f1, f2, f3)};
    }
    case Opcode::ActCol: {
      if (w & 1u) reject(word, "nonzero reserved bits");
      std::vector<std::uint16_t> cols;
      for (unsigned k = 0; k < 5; ++k) cols.push_back(static_cast<std::uint16_t>(field(w, kF1 - 10 * k, kMask10)));
      if (!std::is_sorted(cols.begin(), cols.end())) reject(word, "columns not sorted");
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      // Canonical padding repeats the last column only, so a sorted list with
      // duplicates anywhere but the tail re-encodes differently.
      ActivateColumnsInstr instr{tile, cols};
      if (encode(instr).bits != w) reject(word, "non-canonical column padding");
      return instr;
    }
    case Opcode::ActRange:
      if (low(kF2) != 0) reject(word, "nonzero reserved bits");
      if (f1 > f2) reject(word, "range start exceeds end");
      return ActivateRangeInstr{tile, f1, f2};
    case Opcode::Halt:
      if (w != kHaltWord.bits) reject(word, "HALT with operands");
      return HaltInstr{};
  }
  reject(word, fmt::format("reserved opcode {:#x}", unsigned(op)));
  return HaltInstr{};
}

std::optional<Instruction> try_decode(Word64 word) noexcept {
  try {
    return decode(word);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::vector<Word64> encode_program(std::span<const Instruction> program) {
  std::vector<Word64> out;
  out.reserve(program.size());
  for (const auto& i : program) out.push_back(encode(i));
  return out;
}

std::vector<Instruction> decode_program(std::span<const Word64> words) {
  std::vector<Instruction> out;
  out.reserve(words.size());
  for (std::size_t k = 0; k < words.size(); ++k) {
    try {
      out.push_back(decode(words[k]));
    } catch (const IsaError& e) {
      throw IsaError(fmt::format("word {}: {}", k, e.what()));
    }
  }
  return out;
}

std::string to_assembly(const Instruction& instr) {
  const auto name = mnemonic(opcode_of(instr));
  return std::visit(
      Overload{
          [&](const LogicInstr& i) {
            if (is_unary(i.gate)) return fmt::format("{} {} {} {}", name, i.tile, i.rows.in1(), i.rows.out());
            return fmt::format("{} {} {} {} {}", name, i.tile, i.rows.in1(), i.rows.in2(), i.rows.out());
          },
          [&](const WriteBitInstr& i) { return fmt::format("{} {} {}", name, i.tile, i.row); },
          [&](const ReadRowInstr& i) { return fmt::format("{} {} {}", name, i.tile, i.row); },
          [&](const WriteRowInstr& i) { return fmt::format("{} {} {}", name, i.tile, i.row); },
          [&](const ActivateColumnsInstr& i) { return fmt::format("{} {} {}", name, i.tile, fmt::join(i.cols, " ")); },
          [&](const ActivateRangeInstr& i) { return fmt::format("{} {} {} {}", name, i.tile, i.start, i.end); },
          [&](const HaltInstr&) { return std::string(name); },
      },
      instr);
}

namespace {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r' || line[i] == ',') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' && line[i] != ',' &&
           line[i] != '#') {
      ++i;
    }
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

class LineParser {
 public:
  LineParser(std::size_t line, std::vector<Token> tokens) : line_(line), tokens_(std::move(tokens)) {}

  [[noreturn]] void fail(std::size_t column, const std::string& msg) const { throw AssemblyError(line_, column, msg); }

  std::uint16_t number(std::size_t idx, std::uint64_t max, std::string_view what) const {
    const Token& t = tokens_[idx];
    std::uint64_t v = 0;
    const auto* end = t.text.data() + t.text.size();
    auto [ptr, ec] = std::from_chars(t.text.data(), end, v);
    if (ec != std::errc{} || ptr != end) fail(t.column, fmt::format("expected {} but found '{}'", what, t.text));
    if (v > max) fail(t.column, fmt::format("{} {} out of range (max {})", what, v, max));
    return static_cast<std::uint16_t>(v);
  }

  void expect_args(std::size_t lo, std::size_t hi, std::string_view name) const {
    const std::size_t n = tokens_.size() - 1;
    if (n < lo || n > hi) {
      const std::size_t col = n > hi ? tokens_[hi + 1].column : tokens_.back().column + tokens_.back().text.size();
      const std::string want = lo == hi ? fmt::format("{}", lo) : fmt::format("{} to {}", lo, hi);
      fail(col, fmt::format("{} takes {} operand(s), got {}", name, want, n));
    }
  }

  Instruction parse() const {
    const Token& m = tokens_[0];
    std::string name(m.text);
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return char(std::toupper(c)); });

    if (name == "HALT") {
      expect_args(0, 0, name);
      return HaltInstr{};
    }
    const auto tile_of_line = [&] { return number(1, kMask9, "tile"); };
    if (name == "READROW" || name == "WRITEROW" || name == "SET0" || name == "SET1") {
      expect_args(2, 2, name);
      const auto tile = tile_of_line();
      const auto row = number(2, kMask10, "row");
      if (name == "READROW") return ReadRowInstr{tile, row};
      if (name == "WRITEROW") return WriteRowInstr{tile, row};
      return WriteBitInstr{tile, row, name == "SET1"};
    }
    if (name == "ACTCOL") {
      expect_args(2, 6, name);
      const auto tile = tile_of_line();
      std::vector<std::uint16_t> cols;
      for (std::size_t k = 2; k < tokens_.size(); ++k) cols.push_back(number(k, kMask10, "column"));
      return ActivateColumnsInstr::make(tile, std::move(cols));
    }
    if (name == "ACTRANGE") {
      expect_args(3, 3, name);
      const auto tile = tile_of_line();
      const auto start = number(2, kMask10, "column");
      const auto end = number(3, kMask10, "column");
      if (start > end) fail(tokens_[3].column, "range end precedes start");
      return ActivateRangeInstr{tile, start, end};
    }
    GateName gate;
    try {
      gate = parse_gate_name(name);
    } catch (const DeviceError&) {
      fail(m.column, fmt::format("unknown mnemonic '{}'", m.text));
    }
    const bool unary = is_unary(gate);
    expect_args(unary ? 3 : 4, unary ? 3 : 4, name);
    const auto tile = tile_of_line();
    const auto in1 = number(2, kMask10, "row");
    const auto in2 = unary ? in1 : number(3, kMask10, "row");
    const std::size_t out_idx = unary ? 3 : 4;
    const auto out = number(out_idx, kMask10, "row");
    if (in1 % 2 != in2 % 2) fail(tokens_[3].column, fmt::format("input rows {} and {} differ in parity", in1, in2));
    if (out % 2 == in1 % 2) {
      fail(tokens_[out_idx].column, fmt::format("output row {} must have the opposite parity of the inputs", out));
    }
    return LogicInstr{gate, tile, RowTriple::binary(in1, in2, out)};
  }

 private:
  std::size_t line_;
  std::vector<Token> tokens_;
};

}  // namespace

std::vector<Instruction> assemble(std::string_view text) {
  std::vector<Instruction> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    ++line_no;
    auto tokens = tokenize(line);
    if (!tokens.empty()) {
      const std::size_t first_col = tokens[0].column;
      try {
        out.push_back(LineParser(line_no, std::move(tokens)).parse());
      } catch (const AssemblyError&) {
        throw;
      } catch (const Error& e) {
        throw AssemblyError(line_no, first_col, e.what());
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

std::string disassemble(std::span<const Instruction> program) {
  std::string out;
  for (const auto& i : program) {
    out += to_assembly(i);
    out += '\n';
  }
  return out;
}

void write_program_binary(const std::filesystem::path& path, std::span<const Word64> words) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IsaError(fmt::format("cannot open '{}' for writing", path.string()));
  for (const Word64 w : words) {
    char bytes[8];
    for (int k = 0; k < 8; ++k) bytes[k] = static_cast<char>((w.bits >> (8 * k)) & 0xFF);
    f.write(bytes, 8);
  }
  if (!f) throw IsaError(fmt::format("write to '{}' failed", path.string()));
}

std::vector<Word64> read_program_binary(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IsaError(fmt::format("cannot open '{}'", path.string()));
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() % 8 != 0) {
    throw IsaError(fmt::format("'{}' is {} bytes, not a multiple of 8", path.string(), bytes.size()));
  }
  std::vector<Word64> words(bytes.size() / 8);
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t(bytes[i * 8 + k]) << (8 * k);
    words[i].bits = v;
  }
  return words;
}

std::vector<Instruction> load_program(const std::filesystem::path& path) {
  if (path.extension() == ".bin") return decode_program(read_program_binary(path));
  std::ifstream f(path);
  if (!f) throw IsaError(fmt::format("cannot open '{}'", path.string()));
  std::stringstream ss;
  ss << f.rdbuf();
  return assemble(ss.str());
}

}  // namespace spinpim
