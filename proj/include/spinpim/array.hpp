#pragma once

// A 1024 x 1024 tile of MTJ cells with a column-activation latch.
//
// Rows are stored as 16 packed 64-bit words; column c lives in bit (c % 64)
// of word (c / 64). Every array operation acts on whole rows at once, masked by
// the latch, which gives each active column the same per-cell semantics as the
// device-level gate functions.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spinpim/device.hpp"

namespace spinpim {

class ArrayError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::size_t kTileRows = 1024;
inline constexpr std::size_t kTileCols = 1024;
inline constexpr std::size_t kWordsPerRow = kTileCols / 64;
inline constexpr std::size_t kMaxDataTiles = 512;

using RowBits = std::array<std::uint64_t, kWordsPerRow>;

/// One tile row worth of bits; the 128-byte inter-tile buffer.
struct RowBuffer {
  RowBits bits{};

  bool get(std::size_t col) const { return (bits[col / 64] >> (col % 64)) & 1u; }
  void set(std::size_t col, bool value) {
    const std::uint64_t m = std::uint64_t{1} << (col % 64);
    bits[col / 64] = value ? (bits[col / 64] | m) : (bits[col / 64] & ~m);
  }
  friend bool operator==(const RowBuffer&, const RowBuffer&) = default;
};

/// Rows of one logic operation. Construction enforces the parity rule: the
/// inputs share a parity and the output has the opposite one.
class RowTriple {
 public:
  static RowTriple binary(std::uint16_t in1, std::uint16_t in2, std::uint16_t out);
  static RowTriple unary(std::uint16_t in, std::uint16_t out);
  static bool valid(std::uint16_t in1, std::uint16_t in2, std::uint16_t out) noexcept;

  std::uint16_t in1() const noexcept { return in1_; }
  std::uint16_t in2() const noexcept { return in2_; }
  std::uint16_t out() const noexcept { return out_; }

  friend bool operator==(const RowTriple&, const RowTriple&) = default;

 private:
  RowTriple(std::uint16_t a, std::uint16_t b, std::uint16_t o) : in1_(a), in2_(b), out_(o) {}
  std::uint16_t in1_;
  std::uint16_t in2_;
  std::uint16_t out_;
};

struct CellAddress {
  std::uint16_t tile = 0;
  std::uint16_t row = 0;
  std::uint16_t col = 0;

  void validate() const;
  friend bool operator==(const CellAddress&, const CellAddress&) = default;
};

enum class CellVariant : std::uint8_t { STT, SHE };

struct LogicOptions {
  CompletionModel completion = CompletionModel::Deterministic;
  /// Reject an STT gate whose active output cells are not at the preset value.
  bool strict_preset = false;
};

class Tile {
 public:
  explicit Tile(CellVariant variant = CellVariant::STT);

  CellVariant variant() const noexcept { return variant_; }

  bool cell(std::size_t row, std::size_t col) const;
  void set_cell(std::size_t row, std::size_t col, bool value);
  MtjState state(std::size_t row, std::size_t col) const { return state_of(cell(row, col)); }
  RowBits row_bits(std::size_t row) const;
  /// Overwrites a whole row regardless of the latch; used for preloading.
  void load_row(std::size_t row, const RowBits& bits);

  /// Replaces the latch with `cols`; duplicates collapse. 1..5 columns.
  void activate_columns(std::span<const std::uint16_t> cols);
  /// Replaces the latch with the contiguous range [start, end].
  void activate_range(std::uint16_t start, std::uint16_t end);
  void clear_latch() noexcept;
  const RowBits& active_mask() const noexcept { return active_; }
  std::size_t active_count() const noexcept { return active_count_; }
  bool is_active(std::size_t col) const;

  /// Applies `kind` in every active column. Returns the number of cells whose
  /// value changed.
  std::size_t logic_op(const GateKind& kind, const RowTriple& rows, double pulse_fraction = 1.0,
                       const LogicOptions& options = {});
  std::size_t write_bit(std::size_t row, bool value, double pulse_fraction = 1.0,
                        CompletionModel completion = CompletionModel::Deterministic);
  /// Reads all 1024 columns; non-destructive.
  RowBuffer read_row(std::size_t row) const;
  /// Writes the buffer into `row`, active columns only.
  std::size_t write_row(std::size_t row, const RowBuffer& buffer, double pulse_fraction = 1.0,
                        CompletionModel completion = CompletionModel::Deterministic);

  /// Row-major bit image, 131072 bytes; cell (r, c) is bit (i % 8) of byte
  /// (i / 8) with i = r * 1024 + c.
  std::vector<std::uint8_t> snapshot() const;
  static Tile from_snapshot(std::span<const std::uint8_t> bytes, CellVariant variant = CellVariant::STT);

  /// Cells only; the latch is not part of the comparison.
  bool same_cells(const Tile& other) const noexcept { return cells_ == other.cells_; }
  std::optional<std::pair<std::uint16_t, std::uint16_t>> first_difference(const Tile& other) const;

 private:
  std::uint64_t* row_ptr(std::size_t row) { return cells_.data() + row * kWordsPerRow; }
  const std::uint64_t* row_ptr(std::size_t row) const { return cells_.data() + row * kWordsPerRow; }
  std::size_t masked_store(std::uint64_t* dst, const RowBits& value);

  CellVariant variant_;
  std::vector<std::uint64_t> cells_;
  RowBits active_{};
  std::size_t active_count_ = 0;
};

}  // namespace spinpim
