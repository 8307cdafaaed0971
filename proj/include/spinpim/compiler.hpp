#pragma once

// Lowering of bit-serial fixed-point arithmetic and SVM inference to
// instruction sequences. One logical lane per column; every value is stored
// LSB first along even rows of its lane, and odd rows hold gate temporaries.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spinpim/array.hpp"
#include "spinpim/controller.hpp"
#include "spinpim/isa.hpp"
#include "spinpim/svm.hpp"

namespace spinpim {

class CompilerError : public Error {
 public:
  using Error::Error;
};

enum class Target : std::uint8_t { STT, SHE };
std::string_view to_string(Target t);
Target parse_target(std::string_view name);
constexpr CellVariant variant_of(Target t) noexcept { return t == Target::STT ? CellVariant::STT : CellVariant::SHE; }

enum class RegionRole : std::uint8_t { Operand, Scratch, Result, Constant };
std::string_view to_string(RegionRole r);

struct RowRegion {
  std::string name;
  RegionRole role = RegionRole::Operand;
  std::vector<std::uint16_t> rows;  // LSB first for multi-bit values
};

/// Contiguous columns [first_col, first_col + count) of one tile.
struct LaneGroup {
  std::uint16_t tile = 0;
  std::uint16_t first_col = 0;
  std::uint16_t count = 0;
};

struct LayoutPlan {
  std::size_t width = 0;
  std::vector<LaneGroup> lanes;
  std::vector<RowRegion> regions;

  /// Throws CompilerError for an unknown name.
  const RowRegion& region(std::string_view name) const;
  bool has_region(std::string_view name) const;
  std::size_t rows_used() const;
  /// Throws CompilerError when regions overlap or a row is out of range.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static LayoutPlan from_json(const nlohmann::json& j);
};

enum class Parity : std::uint8_t { Even, Odd };

/// Hands out unused rows of a given parity, lowest first, and records them as
/// named regions of the plan.
class RowAllocator {
 public:
  explicit RowAllocator(LayoutPlan& plan);
  std::vector<std::uint16_t> take(const std::string& name, RegionRole role, std::size_t count,
                                  Parity parity = Parity::Even);
  std::uint16_t take_one(const std::string& name, RegionRole role, Parity parity);
  std::size_t free_rows(Parity parity) const;

 private:
  LayoutPlan& plan_;
  std::array<std::uint16_t, 2> next_{0, 1};
};

/// Instruction stream for one tile. On STT every logic gate is preceded by a
/// write of the gate's preset value to its output row; SHE needs none.
class Emitter {
 public:
  Emitter(Target target, std::uint16_t tile = 0) : target_(target), tile_(tile) {}

  Target target() const noexcept { return target_; }
  std::uint16_t tile() const noexcept { return tile_; }
  void set_tile(std::uint16_t tile) noexcept { tile_ = tile; }

  void gate(GateName g, std::uint16_t in1, std::uint16_t in2, std::uint16_t out);
  void gate(GateName g, std::uint16_t in, std::uint16_t out);
  void set(std::uint16_t row, bool value);
  void set_value(std::span<const std::uint16_t> rows, std::uint64_t value);
  void read_row(std::uint16_t row);
  void write_row(std::uint16_t row);
  void activate_range(std::uint16_t start, std::uint16_t end);
  void activate_columns(std::vector<std::uint16_t> cols);
  void halt();

  const std::vector<Instruction>& code() const noexcept { return code_; }
  std::vector<Instruction> take() { return std::move(code_); }
  std::uint32_t next_pc() const noexcept { return static_cast<std::uint32_t>(code_.size()); }

 private:
  Target target_;
  std::uint16_t tile_;
  std::vector<Instruction> code_;
};

/// s1..s7 of the full adder. s4 is even, the others odd.
using FullAdderScratch = std::array<std::uint16_t, 7>;
FullAdderScratch allocate_fulladd_scratch(RowAllocator& alloc, const std::string& prefix = "fa");

/// Nine NANDs over seven scratch rows; t1 and t5 reach the even side through
/// COPYs into cout and sum, which therefore must not alias the inputs still
/// live at that point: sum != cin and cout not in {a, b, cin}. sum may alias
/// a or b.
void lower_fulladd(Emitter& e, std::uint16_t a, std::uint16_t b, std::uint16_t cin, std::uint16_t sum,
                   std::uint16_t cout, const FullAdderScratch& s);

/// Rows shared by the ripple-carry lowerings.
struct ArithRows {
  FullAdderScratch fa{};
  std::array<std::uint16_t, 2> carry{};  // even
  std::uint16_t zero = 0;                // even, holds 0
  std::uint16_t one = 0;                 // even, holds 1
  std::uint16_t odd_tmp = 0;             // odd
  std::uint16_t even_tmp = 0;            // even
  std::uint16_t sink = 0;                // even, receives discarded carries

  static ArithRows allocate(RowAllocator& alloc);
  /// SET0 zero, SET1 one; emitted once at the start of a block.
  void init_constants(Emitter& e) const;
};

/// out = a + b (+ cin) truncated to out.size() bits; operands shorter than the
/// result are zero-extended. `out` may alias `a` or `b` bit for bit.
void lower_add(Emitter& e, const ArithRows& r, std::span<const std::uint16_t> a, std::span<const std::uint16_t> b,
               std::span<const std::uint16_t> out, bool carry_in = false);
/// out = a - b as a + ~b + 1 over max(|a|, |b|) bits; with one more output bit
/// that bit is 1 iff a >= b.
void lower_sub(Emitter& e, const ArithRows& r, std::span<const std::uint16_t> a, std::span<const std::uint16_t> b,
               std::span<const std::uint16_t> out);
/// out (|a| + |b| bits) = a * b by shift and add. `out` must not alias a or b.
void lower_mult(Emitter& e, const ArithRows& r, std::span<const std::uint16_t> a, std::span<const std::uint16_t> b,
                std::span<const std::uint16_t> out);
/// out = popcount(x AND y) over single-bit features; uses out.size() bits and
/// `and_rows` (one even row per feature) as scratch.
void lower_binary_dot(Emitter& e, const ArithRows& r, std::span<const std::uint16_t> x,
                      std::span<const std::uint16_t> y, std::span<const std::uint16_t> and_rows,
                      std::span<const std::uint16_t> out);

struct Program {
  Target target = Target::STT;
  std::vector<Instruction> instructions;
  LayoutPlan layout;

  std::map<Opcode, std::size_t> opcode_counts() const;
  std::size_t count(Opcode op) const;
  nlohmann::ordered_json metadata_json() const;
};

/// STT only: every logic instruction's output row was written with the gate's
/// preset since its last use and since the last change of the latch. Returns
/// one message per violation, empty when the stream is clean.
std::vector<std::string> check_preset_discipline(std::span<const Instruction> program, Target target);

/// Whole-tile kernels used by tests and the CLI. Each activates columns
/// [0, lanes) of tile 0, computes, and halts. Regions: "a", "b" operands and
/// "result".
enum class Kernel : std::uint8_t { FullAdd, Add, Sub, Mult, BinaryDot };
std::string_view to_string(Kernel k);
Kernel parse_kernel(std::string_view name);
/// `width` is the operand width; for BinaryDot it is the feature count and for
/// FullAdd it is ignored ("a", "b", "cin" single bits; "result" = sum, carry).
Program build_kernel(Kernel kernel, std::size_t width, Target target, std::uint16_t lanes = kTileCols);

/// Writes `value` LSB first into `rows` of one column.
void preload_value(Tile& tile, std::span<const std::uint16_t> rows, std::size_t col, std::uint64_t value);
std::uint64_t read_value(const Tile& tile, std::span<const std::uint16_t> rows, std::size_t col);
/// Same for a row buffer snapshot indexed per bit row.
std::uint64_t gather_value(std::span<const RowBuffer> bit_rows, std::size_t col);

struct SvmCodegenConfig {
  Target target = Target::STT;
  std::size_t max_tiles = kMaxDataTiles;
  /// Inputs evaluated side by side in one run; each gets its own set of lanes.
  std::size_t batch = 1;
  /// Features and support vectors are single bits; the dot product is
  /// AND + popcount.
  bool binarized = false;
};

/// Where every logical SVM operand lives. Lane (slot, i) is column
/// (slot * n_svs + i) counted across tiles of kTileCols columns.
struct SvmLayout {
  std::size_t n_features = 0;
  std::size_t n_svs = 0;
  std::size_t batch = 1;
  bool binarized = false;
  std::size_t feature_bits = 8;
  std::vector<std::uint16_t> x_rows;   // n_features * feature_bits
  std::vector<std::uint16_t> sv_rows;  // n_features * feature_bits
  std::vector<std::uint16_t> alpha_rows;
  std::uint16_t sign_row = 0;
  std::vector<std::uint16_t> term_rows;
  /// Per tile block: PCs of the READROWs of term bits (LSB first) and of the sign row.
  struct Readout {
    std::uint16_t tile = 0;
    std::vector<std::uint32_t> term_pcs;
    std::uint32_t sign_pc = 0;
  };
  std::vector<Readout> readouts;

  std::size_t lanes() const noexcept { return n_svs * batch; }
  std::size_t n_tiles() const noexcept { return (lanes() + kTileCols - 1) / kTileCols; }
  CellAddress lane(std::size_t slot, std::size_t sv) const;
  nlohmann::ordered_json to_json() const;
  static SvmLayout from_json(const nlohmann::json& j);
};

struct SvmProgram {
  Program program;
  SvmLayout layout;
};

/// Throws CompilerError when the model does not fit the tile budget or the
/// row space, or when a binarized model has non-binary elements.
SvmProgram codegen_svm(const QuantizedModel& model, const SvmCodegenConfig& config = {});

/// Loads support vectors, |alpha|, sign bits and `inputs` (at most `batch`;
/// missing slots are zero) into the data tiles.
void preload_svm(Machine& machine, const SvmLayout& layout, const QuantizedModel& model,
                 std::span<const std::vector<std::uint8_t>> inputs);
/// Per-slot class scores from the READROW captures of a finished run.
std::vector<Inference> reduce_svm(const SvmLayout& layout, const QuantizedModel& model,
                                  const std::map<std::uint32_t, RowBuffer>& readouts);

struct SvmRunResult {
  std::vector<Inference> inferences;  // one per input, in order
  EnergyLedger ledger;                // summed over all runs
  std::size_t runs = 0;
  RunStatus status = RunStatus::Halted;
  std::string message;
};

/// Evaluates `inputs` in runs of `layout.batch`, each on a fresh machine with
/// the model preloaded. Stops at the first run that does not halt.
SvmRunResult run_svm(const Simulator& sim, const RunOptions& options, const SvmProgram& program,
                     const QuantizedModel& model, std::span<const std::vector<std::uint8_t>> inputs);

}  // namespace spinpim
