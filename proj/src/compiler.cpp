#include "spinpim/compiler.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <functional>
#include <optional>
#include <set>

#include <fmt/format.h>

namespace spinpim {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_even(std::uint16_t row) { return row % 2 == 0; }

void require_even(std::uint16_t row, const char* what) {
  if (!is_even(row)) throw CompilerError(fmt::format("{} row {} must be even", what, row));
}

// Bits needed to hold `v`.
std::size_t bit_width_of(std::uint64_t v) { return std::max<std::size_t>(1, std::bit_width(v)); }

// Moves an even row to another even row through the odd temporary.
void move_row(Emitter& e, const ArithRows& r, std::uint16_t src, std::uint16_t dst) {
  e.gate(GateName::Copy, src, r.odd_tmp);
  e.gate(GateName::Copy, r.odd_tmp, dst);
}

// Ripple-carry chain shared by add and sub. `b_bit(i)` may emit preparation
// code and returns the row holding bit i of the second operand.
void ripple(Emitter& e, const ArithRows& r, std::span<const std::uint16_t> a, std::size_t b_width,
            const std::function<std::uint16_t(std::size_t)>& b_bit, std::span<const std::uint16_t> out,
            bool carry_in) {
  const std::size_t width = out.size();
  if (width == 0) throw CompilerError("addition needs at least one result bit");
  const std::size_t n = std::min(width, std::max(a.size(), b_width));
  if (n == 0) {
    e.set_value(out, carry_in ? 1 : 0);
    return;
  }
  std::uint16_t cin = carry_in ? r.one : r.zero;
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint16_t ai = i < a.size() ? a[i] : r.zero;
    const std::uint16_t bi = b_bit(i);
    const bool last = i + 1 == n;
    const std::uint16_t cout = !last ? r.carry[k] : (width > n ? out[n] : r.sink);
    lower_fulladd(e, ai, bi, cin, out[i], cout, r.fa);
    cin = cout;
    k ^= 1u;
  }
  for (std::size_t i = n + 1; i < width; ++i) e.set(out[i], false);
}

}  // namespace

std::string_view to_string(Target t) { return t == Target::STT ? "stt" : "she"; }

Target parse_target(std::string_view name) {
  const auto n = lower(name);
  if (n == "stt") return Target::STT;
  if (n == "she") return Target::SHE;
  throw CompilerError(fmt::format("unknown target '{}' (expected stt or she)", name));
}

std::string_view to_string(RegionRole r) {
  switch (r) {
    case RegionRole::Operand: return "operand";
    case RegionRole::Scratch: return "scratch";
    case RegionRole::Result: return "result";
    case RegionRole::Constant: return "constant";
  }
  return "?";
}

// ---------------------------------------------------------------- layout

const RowRegion& LayoutPlan::region(std::string_view name) const {
  for (const auto& r : regions) {
    if (r.name == name) return r;
  }
  throw CompilerError(fmt::format("layout has no region '{}'", name));
}

bool LayoutPlan::has_region(std::string_view name) const {
  return std::any_of(regions.begin(), regions.end(), [&](const RowRegion& r) { return r.name == name; });
}

std::size_t LayoutPlan::rows_used() const {
  std::size_t n = 0;
  for (const auto& r : regions) n += r.rows.size();
  return n;
}

void LayoutPlan::validate() const {
  std::set<std::uint16_t> seen;
  for (const auto& r : regions) {
    for (auto row : r.rows) {
      if (row >= kTileRows) throw CompilerError(fmt::format("region '{}' uses row {} beyond the tile", r.name, row));
      if (!seen.insert(row).second) throw CompilerError(fmt::format("row {} of region '{}' overlaps another region", row, r.name));
    }
  }
  for (const auto& g : lanes) {
    if (g.count == 0 || std::size_t(g.first_col) + g.count > kTileCols || g.tile >= kMaxDataTiles) {
      throw CompilerError("lane group outside the array");
    }
  }
}

nlohmann::ordered_json LayoutPlan::to_json() const {
  nlohmann::ordered_json j;
  j["width"] = width;
  j["lanes"] = nlohmann::ordered_json::array();
  for (const auto& g : lanes) j["lanes"].push_back({{"tile", g.tile}, {"first_col", g.first_col}, {"count", g.count}});
  j["regions"] = nlohmann::ordered_json::array();
  for (const auto& r : regions) {
    j["regions"].push_back({{"name", r.name}, {"role", to_string(r.role)}, {"rows", r.rows}});
  }
  return j;
}

LayoutPlan LayoutPlan::from_json(const nlohmann::json& j) {
  LayoutPlan p;
  try {
    p.width = j.at("width").get<std::size_t>();
    for (const auto& g : j.at("lanes")) {
      p.lanes.push_back({g.at("tile").get<std::uint16_t>(), g.at("first_col").get<std::uint16_t>(),
                         g.at("count").get<std::uint16_t>()});
    }
    for (const auto& r : j.at("regions")) {
      RowRegion reg;
      reg.name = r.at("name").get<std::string>();
      const auto role = r.at("role").get<std::string>();
      if (role == "operand") reg.role = RegionRole::Operand;
      else if (role == "scratch") reg.role = RegionRole::Scratch;
      else if (role == "result") reg.role = RegionRole::Result;
      else if (role == "constant") reg.role = RegionRole::Constant;
      else throw CompilerError(fmt::format("unknown region role '{}'", role));
      reg.rows = r.at("rows").get<std::vector<std::uint16_t>>();
      p.regions.push_back(std::move(reg));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw CompilerError(fmt::format("malformed layout: {}", ex.what()));
  }
  p.validate();
  return p;
}

RowAllocator::RowAllocator(LayoutPlan& plan) : plan_(plan) {
  for (const auto& r : plan.regions) {
    for (auto row : r.rows) {
      auto& next = next_[row % 2];
      next = std::max<std::uint16_t>(next, static_cast<std::uint16_t>(row + 2));
    }
  }
}

std::vector<std::uint16_t> RowAllocator::take(const std::string& name, RegionRole role, std::size_t count,
                                              Parity parity) {
  auto& next = next_[parity == Parity::Odd ? 1 : 0];
  if (count > free_rows(parity)) {
    throw CompilerError(fmt::format("layout overflow: region '{}' needs {} {} rows, {} left", name, count,
                                    parity == Parity::Odd ? "odd" : "even", free_rows(parity)));
  }
  RowRegion reg{name, role, {}};
  for (std::size_t i = 0; i < count; ++i) {
    reg.rows.push_back(next);
    next = static_cast<std::uint16_t>(next + 2);
  }
  plan_.regions.push_back(reg);
  return reg.rows;
}

std::uint16_t RowAllocator::take_one(const std::string& name, RegionRole role, Parity parity) {
  return take(name, role, 1, parity).front();
}

std::size_t RowAllocator::free_rows(Parity parity) const {
  const std::size_t next = next_[parity == Parity::Odd ? 1 : 0];
  return next >= kTileRows ? 0 : (kTileRows - next + 1) / 2;
}

// ---------------------------------------------------------------- emitter

void Emitter::gate(GateName g, std::uint16_t in1, std::uint16_t in2, std::uint16_t out) {
  const GateKind kind = gate_semantics(g);
  if (kind.arity != 2) throw CompilerError(fmt::format("{} is not a two-input gate", to_string(g)));
  if (!RowTriple::valid(in1, in2, out)) {
    throw CompilerError(fmt::format("{} {} {} -> {} violates the parity rule", to_string(g), in1, in2, out));
  }
  if (target_ == Target::STT) set(out, kind.preset);
  code_.push_back(LogicInstr{g, tile_, RowTriple::binary(in1, in2, out)});
}

void Emitter::gate(GateName g, std::uint16_t in, std::uint16_t out) {
  const GateKind kind = gate_semantics(g);
  if (kind.arity != 1) throw CompilerError(fmt::format("{} is not a one-input gate", to_string(g)));
  if (!RowTriple::valid(in, in, out)) {
    throw CompilerError(fmt::format("{} {} -> {} violates the parity rule", to_string(g), in, out));
  }
  if (target_ == Target::STT) set(out, kind.preset);
  code_.push_back(LogicInstr{g, tile_, RowTriple::unary(in, out)});
}

void Emitter::set(std::uint16_t row, bool value) { code_.push_back(WriteBitInstr{tile_, row, value}); }

void Emitter::set_value(std::span<const std::uint16_t> rows, std::uint64_t value) {
  for (std::size_t i = 0; i < rows.size(); ++i) set(rows[i], i < 64 && ((value >> i) & 1u));
}

void Emitter::read_row(std::uint16_t row) { code_.push_back(ReadRowInstr{tile_, row}); }
void Emitter::write_row(std::uint16_t row) { code_.push_back(WriteRowInstr{tile_, row}); }

void Emitter::activate_range(std::uint16_t start, std::uint16_t end) {
  code_.push_back(ActivateRangeInstr{tile_, start, end});
}

void Emitter::activate_columns(std::vector<std::uint16_t> cols) {
  code_.push_back(ActivateColumnsInstr::make(tile_, std::move(cols)));
}

void Emitter::halt() { code_.push_back(HaltInstr{}); }

// ---------------------------------------------------------------- lowerings

FullAdderScratch allocate_fulladd_scratch(RowAllocator& alloc, const std::string& prefix) {
  FullAdderScratch s{};
  const auto odd = alloc.take(prefix + "_scratch_odd", RegionRole::Scratch, 6, Parity::Odd);
  s[3] = alloc.take_one(prefix + "_scratch_even", RegionRole::Scratch, Parity::Even);
  s[0] = odd[0];
  s[1] = odd[1];
  s[2] = odd[2];
  s[4] = odd[3];
  s[5] = odd[4];
  s[6] = odd[5];
  return s;
}

void lower_fulladd(Emitter& e, std::uint16_t a, std::uint16_t b, std::uint16_t cin, std::uint16_t sum,
                   std::uint16_t cout, const FullAdderScratch& s) {
  require_even(a, "full-adder input");
  require_even(b, "full-adder input");
  require_even(cin, "full-adder carry-in");
  require_even(sum, "full-adder sum");
  require_even(cout, "full-adder carry-out");
  if (sum == cin) throw CompilerError("full-adder sum must not alias the carry-in");
  if (cout == a || cout == b || cout == cin) throw CompilerError("full-adder carry-out must not alias an input");
  if (sum == cout) throw CompilerError("full-adder sum and carry-out must differ");
  std::set<std::uint16_t> distinct(s.begin(), s.end());
  if (distinct.size() != s.size()) throw CompilerError("full adder needs 7 distinct scratch rows");
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool want_even = i == 3;
    if (is_even(s[i]) != want_even) {
      throw CompilerError(fmt::format("full-adder scratch s{} (row {}) must be {}", i + 1, s[i],
                                      want_even ? "even" : "odd"));
    }
  }
  for (auto row : {a, b, cin, sum, cout}) {
    if (distinct.count(row)) throw CompilerError(fmt::format("row {} is both an operand and full-adder scratch", row));
  }
  const auto [s1, s2, s3, s4, s5, s6, s7] = s;
  e.gate(GateName::Nand, a, b, s1);
  e.gate(GateName::Copy, s1, cout);
  e.gate(GateName::Nand, a, cout, s2);
  e.gate(GateName::Nand, b, cout, s3);
  e.gate(GateName::Nand, s2, s3, s4);  // a xor b
  e.gate(GateName::Nand, s4, cin, s5);
  e.gate(GateName::Copy, s5, sum);
  e.gate(GateName::Nand, s4, sum, s6);
  e.gate(GateName::Nand, cin, sum, s7);
  e.gate(GateName::Nand, s6, s7, sum);
  e.gate(GateName::Nand, s5, s1, cout);
}

ArithRows ArithRows::allocate(RowAllocator& alloc) {
  ArithRows r;
  r.fa = allocate_fulladd_scratch(alloc);
  const auto carry = alloc.take("carry", RegionRole::Scratch, 2, Parity::Even);
  r.carry = {carry[0], carry[1]};
  r.zero = alloc.take_one("zero", RegionRole::Constant, Parity::Even);
  r.one = alloc.take_one("one", RegionRole::Constant, Parity::Even);
  r.odd_tmp = alloc.take_one("tmp_odd", RegionRole::Scratch, Parity::Odd);
  r.even_tmp = alloc.take_one("tmp_even", RegionRole::Scratch, Parity::Even);
  r.sink = alloc.take_one("carry_sink", RegionRole::Scratch, Parity::Even);
  return r;
}

void ArithRows::init_constants(Emitter& e) const {
  e.set(zero, false);
  e.set(one, true);
}

void lower_add(Emitter& e, const ArithRows& r, std::span<const std::uint16_t> a, std::span<const std::uint16_t> b,
               std::span<const std::uint16_t> out, bool carry_in) {
  ripple(e, r, a, b.size(), [&](std::size_t i) { return i < b.size() ? b[i] : r.zero; }, out, carry_in);
}

void lower_sub(Emitter& e, const ArithRows& r, std::span<const std::uint16_t> a, std::span<const std::uint16_t> b,
               std::span<const std::uint16_t> out) {
  const std::size_t width = std::max(a.size(), b.size());
  const auto inverted = [&](std::size_t i) -> std::uint16_t {
    if (i >= b.size()) return r.one;
    e.gate(GateName::Not, b[i], r.odd_tmp);
    e.gate(GateName::Copy, r.odd_tmp, r.even_tmp);
    return r.even_tmp;
  };
  ripple(e, r, a, width, inverted, out, true);
}

void lower_mult(Emitter& e, const ArithRows& r, std::span<const std::uint16_t> a, std::span<const std::uint16_t> b,
                std::span<const std::uint16_t> out) {
  const std::size_t wa = a.size();
  const std::size_t wb = b.size();
  if (wa == 0 || wb == 0) throw CompilerError("multiplication operands need at least one bit");
  if (out.size() != wa + wb) {
    throw CompilerError(fmt::format("product of {}x{} bits needs {} result rows, got {}", wa, wb, wa + wb, out.size()));
  }
  for (auto row : out) {
    if (std::find(a.begin(), a.end(), row) != a.end() || std::find(b.begin(), b.end(), row) != b.end()) {
      throw CompilerError("product rows must not alias the operands");
    }
  }
  for (std::size_t i = 0; i < wa; ++i) {
    e.gate(GateName::And, a[i], b[0], r.odd_tmp);
    e.gate(GateName::Copy, r.odd_tmp, out[i]);
  }
  e.set(out[wa], false);
  for (std::size_t j = 1; j < wb; ++j) {
    std::uint16_t cin = r.zero;
    std::size_t k = 0;
    for (std::size_t i = 0; i < wa; ++i) {
      e.gate(GateName::And, a[i], b[j], r.odd_tmp);
      e.gate(GateName::Copy, r.odd_tmp, r.even_tmp);
      const std::uint16_t cout = i + 1 == wa ? out[j + wa] : r.carry[k];
      lower_fulladd(e, out[i + j], r.even_tmp, cin, out[i + j], cout, r.fa);
      cin = cout;
      k ^= 1u;
    }
  }
}

void lower_binary_dot(Emitter& e, const ArithRows& r, std::span<const std::uint16_t> x,
                      std::span<const std::uint16_t> y, std::span<const std::uint16_t> and_rows,
                      std::span<const std::uint16_t> out) {
  const std::size_t n = x.size();
  if (n == 0) throw CompilerError("binary dot product needs at least one feature");
  if (y.size() != n || and_rows.size() != n) throw CompilerError("binary dot operands differ in length");
  if (out.size() < bit_width_of(n)) {
    throw CompilerError(fmt::format("popcount of {} features needs {} result rows", n, bit_width_of(n)));
  }
  for (std::size_t f = 0; f < n; ++f) {
    e.gate(GateName::And, x[f], y[f], r.odd_tmp);
    e.gate(GateName::Copy, r.odd_tmp, and_rows[f]);
  }
  // Adder tree. A node covering leaves [first, first + count) keeps its
  // partial count in the leading rows of its own leaf block.
  struct Node {
    std::size_t first;
    std::size_t count;
    std::size_t width;
  };
  std::vector<Node> level;
  for (std::size_t f = 0; f < n; ++f) level.push_back({f, 1, 1});
  while (level.size() > 1) {
    std::vector<Node> next;
    for (std::size_t i = 0; i < level.size(); i += 2) {
      if (i + 1 == level.size()) {
        next.push_back(level[i]);
        continue;
      }
      const Node& lhs = level[i];
      const Node& rhs = level[i + 1];
      const std::size_t width = bit_width_of(lhs.count + rhs.count);
      const auto a = and_rows.subspan(lhs.first, lhs.width);
      const auto b = and_rows.subspan(rhs.first, rhs.width);
      std::vector<std::uint16_t> dst(and_rows.begin() + long(lhs.first), and_rows.begin() + long(lhs.first + width));
      const bool grows = width > std::max(lhs.width, rhs.width);
      // The new top bit is a carry-out and may land on a row of the right
      // operand that is still live, so it goes through even_tmp.
      if (grows) dst.back() = r.even_tmp;
      lower_add(e, r, a, b, dst);
      if (grows) move_row(e, r, r.even_tmp, and_rows[lhs.first + width - 1]);
      next.push_back({lhs.first, lhs.count + rhs.count, width});
    }
    level = std::move(next);
  }
  const Node& root = level.front();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i < root.width) {
      move_row(e, r, and_rows[root.first + i], out[i]);
    } else {
      e.set(out[i], false);
    }
  }
}

// ---------------------------------------------------------------- programs

std::map<Opcode, std::size_t> Program::opcode_counts() const {
  std::map<Opcode, std::size_t> counts;
  for (const auto& in : instructions) ++counts[opcode_of(in)];
  return counts;
}

std::size_t Program::count(Opcode op) const {
  return static_cast<std::size_t>(
      std::count_if(instructions.begin(), instructions.end(), [&](const Instruction& in) { return opcode_of(in) == op; }));
}

nlohmann::ordered_json Program::metadata_json() const {
  nlohmann::ordered_json j;
  j["target"] = to_string(target);
  j["instructions"] = instructions.size();
  nlohmann::ordered_json ops = nlohmann::ordered_json::object();
  for (const auto& [op, n] : opcode_counts()) ops[std::string(mnemonic(op))] = n;
  j["opcodes"] = ops;
  j["layout"] = layout.to_json();
  return j;
}

std::vector<std::string> check_preset_discipline(std::span<const Instruction> program, Target target) {
  std::vector<std::string> problems;
  if (target == Target::SHE) return problems;
  std::map<std::pair<std::uint16_t, std::uint16_t>, bool> known;
  for (std::size_t pc = 0; pc < program.size(); ++pc) {
    const auto& in = program[pc];
    if (const auto* w = std::get_if<WriteBitInstr>(&in)) {
      known[{w->tile, w->row}] = w->value;
    } else if (const auto* l = std::get_if<LogicInstr>(&in)) {
      const auto key = std::make_pair(l->tile, l->rows.out());
      const bool preset = gate_semantics(l->gate).preset;
      const auto it = known.find(key);
      if (it == known.end() || it->second != preset) {
        problems.push_back(fmt::format("pc {}: {} output row {} of tile {} not preset to {}", pc, to_string(l->gate),
                                       key.second, key.first, int(preset)));
      }
      known.erase(key);
    } else if (const auto* wr = std::get_if<WriteRowInstr>(&in)) {
      known.erase({wr->tile, wr->row});
    } else if (is_activation(in)) {
      known.clear();
    }
  }
  return problems;
}

std::string_view to_string(Kernel k) {
  switch (k) {
    case Kernel::FullAdd: return "fulladd";
    case Kernel::Add: return "add";
    case Kernel::Sub: return "sub";
    case Kernel::Mult: return "mult";
    case Kernel::BinaryDot: return "bdot";
  }
  return "?";
}

Kernel parse_kernel(std::string_view name) {
  const auto n = lower(name);
  for (Kernel k : {Kernel::FullAdd, Kernel::Add, Kernel::Sub, Kernel::Mult, Kernel::BinaryDot}) {
    if (n == to_string(k)) return k;
  }
  throw CompilerError(fmt::format("unknown kernel '{}'", name));
}

Program build_kernel(Kernel kernel, std::size_t width, Target target, std::uint16_t lanes) {
  if (lanes == 0 || lanes > kTileCols) throw CompilerError(fmt::format("lane count {} outside 1..{}", lanes, kTileCols));
  if (kernel != Kernel::FullAdd && width == 0) throw CompilerError("kernel width must be positive");
  Program p;
  p.target = target;
  p.layout.width = kernel == Kernel::FullAdd ? 1 : width;
  p.layout.lanes.push_back({0, 0, lanes});
  RowAllocator alloc(p.layout);
  Emitter e(target);
  e.activate_range(0, static_cast<std::uint16_t>(lanes - 1));

  if (kernel == Kernel::FullAdd) {
    const auto a = alloc.take_one("a", RegionRole::Operand, Parity::Even);
    const auto b = alloc.take_one("b", RegionRole::Operand, Parity::Even);
    const auto cin = alloc.take_one("cin", RegionRole::Operand, Parity::Even);
    const auto result = alloc.take("result", RegionRole::Result, 2, Parity::Even);
    const auto s = allocate_fulladd_scratch(alloc, "scratch");
    lower_fulladd(e, a, b, cin, result[0], result[1], s);
  } else {
    const auto a = alloc.take("a", RegionRole::Operand, width);
    const auto b = alloc.take("b", RegionRole::Operand, width);
    const std::size_t out_width = kernel == Kernel::Mult        ? 2 * width
                                  : kernel == Kernel::BinaryDot ? bit_width_of(width)
                                                                : width + 1;
    const auto result = alloc.take("result", RegionRole::Result, out_width);
    const auto r = ArithRows::allocate(alloc);
    r.init_constants(e);
    switch (kernel) {
      case Kernel::Add: lower_add(e, r, a, b, result); break;
      case Kernel::Sub: lower_sub(e, r, a, b, result); break;
      case Kernel::Mult: lower_mult(e, r, a, b, result); break;
      case Kernel::BinaryDot: {
        const auto tmp = alloc.take("and", RegionRole::Scratch, width);
        lower_binary_dot(e, r, a, b, tmp, result);
        break;
      }
      case Kernel::FullAdd: break;
    }
  }
  e.halt();
  p.instructions = e.take();
  p.layout.validate();
  return p;
}

void preload_value(Tile& tile, std::span<const std::uint16_t> rows, std::size_t col, std::uint64_t value) {
  for (std::size_t i = 0; i < rows.size(); ++i) tile.set_cell(rows[i], col, i < 64 && ((value >> i) & 1u));
}

std::uint64_t read_value(const Tile& tile, std::span<const std::uint16_t> rows, std::size_t col) {
  if (rows.size() > 64) throw CompilerError("values wider than 64 bits cannot be read back");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) v |= std::uint64_t(tile.cell(rows[i], col)) << i;
  return v;
}

std::uint64_t gather_value(std::span<const RowBuffer> bit_rows, std::size_t col) {
  if (bit_rows.size() > 64) throw CompilerError("values wider than 64 bits cannot be read back");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < bit_rows.size(); ++i) v |= std::uint64_t(bit_rows[i].get(col)) << i;
  return v;
}

// ---------------------------------------------------------------- SVM

namespace {

constexpr std::size_t kTermWidth = 16;   // t = (dot >> shift) + c0
constexpr std::size_t kAlphaWidth = 15;  // |alpha| <= 32767
constexpr std::size_t kKernelWidth = 2 * kTermWidth;
constexpr std::size_t kProductWidth = kAlphaWidth + kKernelWidth;

}  // namespace

CellAddress SvmLayout::lane(std::size_t slot, std::size_t sv) const {
  if (slot >= batch || sv >= n_svs) throw CompilerError("lane index out of range");
  const std::size_t g = slot * n_svs + sv;
  return {static_cast<std::uint16_t>(g / kTileCols), 0, static_cast<std::uint16_t>(g % kTileCols)};
}

nlohmann::ordered_json SvmLayout::to_json() const {
  nlohmann::ordered_json j;
  j["features"] = n_features;
  j["support_vectors"] = n_svs;
  j["batch"] = batch;
  j["binarized"] = binarized;
  j["feature_bits"] = feature_bits;
  j["x_rows"] = x_rows;
  j["sv_rows"] = sv_rows;
  j["alpha_rows"] = alpha_rows;
  j["sign_row"] = sign_row;
  j["term_rows"] = term_rows;
  j["readouts"] = nlohmann::ordered_json::array();
  for (const auto& r : readouts) {
    j["readouts"].push_back({{"tile", r.tile}, {"term_pcs", r.term_pcs}, {"sign_pc", r.sign_pc}});
  }
  return j;
}

SvmLayout SvmLayout::from_json(const nlohmann::json& j) {
  SvmLayout l;
  try {
    l.n_features = j.at("features").get<std::size_t>();
    l.n_svs = j.at("support_vectors").get<std::size_t>();
    l.batch = j.at("batch").get<std::size_t>();
    l.binarized = j.at("binarized").get<bool>();
    l.feature_bits = j.at("feature_bits").get<std::size_t>();
    l.x_rows = j.at("x_rows").get<std::vector<std::uint16_t>>();
    l.sv_rows = j.at("sv_rows").get<std::vector<std::uint16_t>>();
    l.alpha_rows = j.at("alpha_rows").get<std::vector<std::uint16_t>>();
    l.sign_row = j.at("sign_row").get<std::uint16_t>();
    l.term_rows = j.at("term_rows").get<std::vector<std::uint16_t>>();
    for (const auto& r : j.at("readouts")) {
      l.readouts.push_back({r.at("tile").get<std::uint16_t>(), r.at("term_pcs").get<std::vector<std::uint32_t>>(),
                            r.at("sign_pc").get<std::uint32_t>()});
    }
  } catch (const nlohmann::json::exception& ex) {
    throw CompilerError(fmt::format("malformed SVM layout: {}", ex.what()));
  }
  if (l.batch == 0) throw CompilerError("SVM layout batch must be positive");
  if (l.x_rows.size() != l.n_features * l.feature_bits || l.sv_rows.size() != l.x_rows.size()) {
    throw CompilerError("SVM layout feature rows do not match the feature count");
  }
  if (l.readouts.size() != l.n_tiles()) throw CompilerError("SVM layout needs one readout block per tile");
  return l;
}

SvmProgram codegen_svm(const QuantizedModel& model, const SvmCodegenConfig& config) {
  if (config.batch == 0) throw CompilerError("batch must be positive");
  if (model.n_features == 0) throw CompilerError("model has no features");
  SvmProgram out;
  SvmLayout& L = out.layout;
  L.n_features = model.n_features;
  L.n_svs = model.svs.size();
  L.batch = config.batch;
  L.binarized = config.binarized;
  L.feature_bits = config.binarized ? 1 : 8;
  if (L.n_tiles() > config.max_tiles) {
    throw CompilerError(fmt::format("{} lanes need {} tiles, budget is {}", L.lanes(), L.n_tiles(), config.max_tiles));
  }
  for (const auto& sv : model.svs) {
    if (sv.x.size() != model.n_features) throw CompilerError("support vector length differs from the feature count");
    if (std::abs(sv.alpha) > 32767) throw CompilerError("alpha outside 16-bit signed range");
    if (config.binarized && std::any_of(sv.x.begin(), sv.x.end(), [](std::uint8_t v) { return v > 1; })) {
      throw CompilerError("binarized model has non-binary support-vector elements");
    }
  }
  if (model.c0 >= (1u << kTermWidth)) throw CompilerError("c0 does not fit 16 bits");
  const std::uint64_t max_dot =
      config.binarized ? model.n_features : std::uint64_t(model.n_features) * 255u * 255u;
  if ((max_dot >> model.shift) + model.c0 >= (1u << kTermWidth)) {
    throw CompilerError("kernel argument overflows 16 bits; quantize the model first");
  }
  const std::size_t dot_width = bit_width_of(max_dot);

  Program& p = out.program;
  p.target = config.target;
  p.layout.width = L.feature_bits;
  RowAllocator alloc(p.layout);
  const std::size_t fbits = L.feature_bits * model.n_features;
  L.x_rows = alloc.take("x", RegionRole::Operand, fbits);
  L.sv_rows = alloc.take("sv", RegionRole::Operand, fbits);
  L.alpha_rows = alloc.take("alpha", RegionRole::Operand, kAlphaWidth);
  L.sign_row = alloc.take_one("sign", RegionRole::Operand, Parity::Even);
  const auto dot = alloc.take("dot", RegionRole::Scratch, dot_width);
  std::vector<std::uint16_t> prod;
  std::vector<std::uint16_t> and_rows;
  if (config.binarized) {
    and_rows = alloc.take("and", RegionRole::Scratch, model.n_features);
  } else {
    prod = alloc.take("prod", RegionRole::Scratch, 16);
  }
  const auto c0 = alloc.take("c0", RegionRole::Constant, kTermWidth);
  const auto t = alloc.take("t", RegionRole::Scratch, kTermWidth);
  const auto k = alloc.take("k", RegionRole::Scratch, kKernelWidth);
  L.term_rows = alloc.take("term", RegionRole::Result, kProductWidth);
  const auto r = ArithRows::allocate(alloc);

  Emitter e(config.target);
  const std::size_t lanes = L.lanes();
  for (std::size_t tile = 0; tile < L.n_tiles(); ++tile) {
    const auto count = static_cast<std::uint16_t>(std::min(kTileCols, lanes - tile * kTileCols));
    p.layout.lanes.push_back({static_cast<std::uint16_t>(tile), 0, count});
    e.set_tile(static_cast<std::uint16_t>(tile));
    e.activate_range(0, static_cast<std::uint16_t>(count - 1));
    r.init_constants(e);
    e.set_value(c0, model.c0);

    const auto feature = [&](const std::vector<std::uint16_t>& rows, std::size_t f) {
      return std::span<const std::uint16_t>(rows).subspan(f * L.feature_bits, L.feature_bits);
    };
    if (config.binarized) {
      lower_binary_dot(e, r, L.x_rows, L.sv_rows, and_rows, dot);
    } else {
      for (std::size_t f = 0; f < model.n_features; ++f) {
        if (f == 0) {
          // F * 255^2 needs at least 16 bits, so the first product lands in place.
          lower_mult(e, r, feature(L.x_rows, 0), feature(L.sv_rows, 0), std::span<const std::uint16_t>(dot).first(16));
          for (std::size_t i = 16; i < dot.size(); ++i) e.set(dot[i], false);
        } else {
          lower_mult(e, r, feature(L.x_rows, f), feature(L.sv_rows, f), prod);
          lower_add(e, r, dot, prod, dot);
        }
      }
    }
    const auto shifted = std::span<const std::uint16_t>(dot).subspan(std::min<std::size_t>(model.shift, dot.size()));
    lower_add(e, r, shifted, c0, t);
    lower_mult(e, r, t, t, k);
    lower_mult(e, r, L.alpha_rows, k, L.term_rows);

    SvmLayout::Readout ro;
    ro.tile = static_cast<std::uint16_t>(tile);
    for (auto row : L.term_rows) {
      ro.term_pcs.push_back(e.next_pc());
      e.read_row(row);
    }
    ro.sign_pc = e.next_pc();
    e.read_row(L.sign_row);
    L.readouts.push_back(std::move(ro));
  }
  e.halt();
  p.instructions = e.take();
  p.layout.validate();
  return out;
}

void preload_svm(Machine& machine, const SvmLayout& layout, const QuantizedModel& model,
                 std::span<const std::vector<std::uint8_t>> inputs) {
  if (model.svs.size() != layout.n_svs || model.n_features != layout.n_features) {
    throw CompilerError("model does not match the SVM layout");
  }
  if (inputs.size() > layout.batch) {
    throw CompilerError(fmt::format("{} inputs exceed the batch of {}", inputs.size(), layout.batch));
  }
  if (machine.tiles.size() < layout.n_tiles()) {
    throw CompilerError(fmt::format("machine has {} data tiles, layout needs {}", machine.tiles.size(), layout.n_tiles()));
  }
  const std::uint64_t limit = layout.binarized ? 1 : 255;
  for (const auto& x : inputs) {
    if (x.size() != layout.n_features) throw CompilerError("input length differs from the feature count");
    if (std::any_of(x.begin(), x.end(), [&](std::uint8_t v) { return v > limit; })) {
      throw CompilerError("binarized layout received a non-binary input");
    }
  }
  const std::size_t fb = layout.feature_bits;
  for (std::size_t slot = 0; slot < layout.batch; ++slot) {
    for (std::size_t i = 0; i < layout.n_svs; ++i) {
      const CellAddress at = layout.lane(slot, i);
      Tile& tile = machine.tiles[at.tile];
      const auto& sv = model.svs[i];
      for (std::size_t f = 0; f < layout.n_features; ++f) {
        const auto rows = std::span<const std::uint16_t>(layout.sv_rows).subspan(f * fb, fb);
        preload_value(tile, rows, at.col, sv.x[f]);
        const auto xrows = std::span<const std::uint16_t>(layout.x_rows).subspan(f * fb, fb);
        preload_value(tile, xrows, at.col, slot < inputs.size() ? inputs[slot][f] : 0);
      }
      preload_value(tile, layout.alpha_rows, at.col, static_cast<std::uint64_t>(std::abs(sv.alpha)));
      tile.set_cell(layout.sign_row, at.col, sv.alpha < 0);
    }
  }
}

std::vector<Inference> reduce_svm(const SvmLayout& layout, const QuantizedModel& model,
                                  const std::map<std::uint32_t, RowBuffer>& readouts) {
  if (model.svs.size() != layout.n_svs) throw CompilerError("model does not match the SVM layout");
  std::vector<Inference> out(layout.batch);
  for (auto& inf : out) inf.scores.assign(model.n_classes, 0);
  const auto capture = [&](std::uint32_t pc) -> const RowBuffer& {
    const auto it = readouts.find(pc);
    if (it == readouts.end()) throw CompilerError(fmt::format("no readout captured at pc {}", pc));
    return it->second;
  };
  for (const auto& block : layout.readouts) {
    std::vector<RowBuffer> bits;
    for (auto pc : block.term_pcs) bits.push_back(capture(pc));
    const RowBuffer& sign = capture(block.sign_pc);
    for (std::size_t col = 0; col < kTileCols; ++col) {
      const std::size_t g = std::size_t(block.tile) * kTileCols + col;
      if (g >= layout.lanes()) break;
      const std::size_t slot = g / layout.n_svs;
      const std::size_t sv = g % layout.n_svs;
      const auto term = static_cast<std::int64_t>(gather_value(bits, col));
      out[slot].scores[model.svs[sv].class_index] += sign.get(col) ? -term : term;
    }
  }
  for (auto& inf : out) {
    for (std::size_t c = 0; c < model.n_classes; ++c) inf.scores[c] -= model.rho[c];
    inf.label = argmax(inf.scores);
  }
  return out;
}

SvmRunResult run_svm(const Simulator& sim, const RunOptions& options, const SvmProgram& program,
                     const QuantizedModel& model, std::span<const std::vector<std::uint8_t>> inputs) {
  SvmRunResult out;
  const auto memory = InstructionMemory::from_program(program.program.instructions);
  const std::size_t batch = program.layout.batch;
  for (std::size_t first = 0; first < inputs.size(); first += batch) {
    const auto chunk = inputs.subspan(first, std::min(batch, inputs.size() - first));
    Machine m = Machine::create(memory, program.layout.n_tiles(), variant_of(program.program.target));
    preload_svm(m, program.layout, model, chunk);
    const RunResult r = sim.run(std::move(m), options);
    out.ledger += r.ledger;
    ++out.runs;
    if (r.status != RunStatus::Halted) {
      out.status = r.status;
      out.message = fmt::format("run {}: {}", out.runs, r.message);
      return out;
    }
    auto inf = reduce_svm(program.layout, model, r.readouts);
    for (std::size_t i = 0; i < chunk.size(); ++i) out.inferences.push_back(std::move(inf[i]));
  }
  return out;
}

}  // namespace spinpim
