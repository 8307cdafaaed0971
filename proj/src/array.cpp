#include "spinpim/array.hpp"

#include <algorithm>
#include <bit>

#include <fmt/format.h>

namespace spinpim {

namespace {

void check_row(std::size_t row) {
  if (row >= kTileRows) throw ArrayError(fmt::format("row {} out of range", row));
}

void check_col(std::size_t col) {
  if (col >= kTileCols) throw ArrayError(fmt::format("column {} out of range", col));
}

constexpr std::uint64_t kAll = ~std::uint64_t{0};

/// Per-column switch predicate of `kind` evaluated on packed input words.
std::uint64_t predicate_word(const GateKind& kind, std::uint64_t a, std::uint64_t b) {
  std::uint64_t pred = 0;
  for (unsigned idx = 0; idx < 4; ++idx) {
    if ((kind.switch_table >> idx) & 1u) pred |= ((idx & 1u) ? a : ~a) & ((idx & 2u) ? b : ~b);
  }
  return pred;
}

}  // namespace

RowTriple RowTriple::binary(std::uint16_t in1, std::uint16_t in2, std::uint16_t out) {
  if (!valid(in1, in2, out)) {
    throw ArrayError(fmt::format("rows ({}, {}, {}) violate the parity rule or range", in1, in2, out));
  }
  return RowTriple(in1, in2, out);
}

RowTriple RowTriple::unary(std::uint16_t in, std::uint16_t out) { return binary(in, in, out); }

bool RowTriple::valid(std::uint16_t in1, std::uint16_t in2, std::uint16_t out) noexcept {
  if (in1 >= kTileRows || in2 >= kTileRows || out >= kTileRows) return false;
  return (in1 % 2) == (in2 % 2) && (out % 2) != (in1 % 2);
}

void CellAddress::validate() const {
  if (tile >= kMaxDataTiles) throw ArrayError(fmt::format("tile {} out of range", tile));
  check_row(row);
  check_col(col);
}

Tile::Tile(CellVariant variant) : variant_(variant), cells_(kTileRows * kWordsPerRow, 0) {}

bool Tile::cell(std::size_t row, std::size_t col) const {
  check_row(row);
  check_col(col);
  return (row_ptr(row)[col / 64] >> (col % 64)) & 1u;
}

void Tile::set_cell(std::size_t row, std::size_t col, bool value) {
  check_row(row);
  check_col(col);
  std::uint64_t& w = row_ptr(row)[col / 64];
  const std::uint64_t m = std::uint64_t{1} << (col % 64);
  w = value ? (w | m) : (w & ~m);
}

RowBits Tile::row_bits(std::size_t row) const {
  check_row(row);
  RowBits bits;
  std::copy_n(row_ptr(row), kWordsPerRow, bits.begin());
  return bits;
}

void Tile::load_row(std::size_t row, const RowBits& bits) {
  check_row(row);
  std::copy(bits.begin(), bits.end(), row_ptr(row));
}

void Tile::activate_columns(std::span<const std::uint16_t> cols) {
  if (cols.empty() || cols.size() > 5) {
    throw ArrayError(fmt::format("activate needs 1 to 5 columns, got {}", cols.size()));
  }
  RowBits mask{};
  for (auto c : cols) {
    check_col(c);
    mask[c / 64] |= std::uint64_t{1} << (c % 64);
  }
  active_ = mask;
  active_count_ = 0;
  for (auto w : active_) active_count_ += std::popcount(w);
}

void Tile::activate_range(std::uint16_t start, std::uint16_t end) {
  check_col(start);
  check_col(end);
  if (start > end) throw ArrayError(fmt::format("empty column range [{}, {}]", start, end));
  RowBits mask{};
  for (std::size_t c = start; c <= end; ++c) mask[c / 64] |= std::uint64_t{1} << (c % 64);
  active_ = mask;
  active_count_ = std::size_t(end) - start + 1;
}

void Tile::clear_latch() noexcept {
  active_ = {};
  active_count_ = 0;
}

bool Tile::is_active(std::size_t col) const {
  check_col(col);
  return (active_[col / 64] >> (col % 64)) & 1u;
}

std::size_t Tile::masked_store(std::uint64_t* dst, const RowBits& value) {
  std::size_t changed = 0;
  for (std::size_t w = 0; w < kWordsPerRow; ++w) {
    const std::uint64_t next = (dst[w] & ~active_[w]) | (value[w] & active_[w]);
    changed += std::popcount(next ^ dst[w]);
    dst[w] = next;
  }
  return changed;
}

std::size_t Tile::logic_op(const GateKind& kind, const RowTriple& rows, double pulse_fraction,
                           const LogicOptions& options) {
  if (active_count_ == 0) return 0;
  const std::uint64_t* a = row_ptr(rows.in1());
  const std::uint64_t* b = row_ptr(rows.in2());
  std::uint64_t* out = row_ptr(rows.out());

  if (variant_ == CellVariant::STT && options.strict_preset) {
    for (std::size_t w = 0; w < kWordsPerRow; ++w) {
      const std::uint64_t off = (kind.preset ? ~out[w] : out[w]) & active_[w];
      if (off != 0) {
        const std::size_t col = w * 64 + std::countr_zero(off);
        throw ArrayError(fmt::format("{} output ({}, {}) is not at preset {}", to_string(kind.name),
                                     rows.out(), col, int(kind.preset)));
      }
    }
  }
  if (!pulse_completes(pulse_fraction, options.completion)) return 0;

  const std::uint64_t target = kind.target() ? kAll : 0;
  const std::uint64_t preset = kind.preset ? kAll : 0;
  std::size_t changed = 0;
  for (std::size_t w = 0; w < kWordsPerRow; ++w) {
    const std::uint64_t pred = predicate_word(kind, a[w], b[w]);
    std::uint64_t next;
    if (variant_ == CellVariant::STT) {
      const std::uint64_t sw = pred & active_[w];
      next = kind.target() ? (out[w] | sw) : (out[w] & ~sw);
    } else {
      const std::uint64_t result = (pred & target) | (~pred & preset);
      next = (out[w] & ~active_[w]) | (result & active_[w]);
    }
    changed += std::popcount(next ^ out[w]);
    out[w] = next;
  }
  return changed;
}

std::size_t Tile::write_bit(std::size_t row, bool value, double pulse_fraction,
                            CompletionModel completion) {
  check_row(row);
  if (!pulse_completes(pulse_fraction, completion)) return 0;
  RowBits v;
  v.fill(value ? kAll : 0);
  return masked_store(row_ptr(row), v);
}

RowBuffer Tile::read_row(std::size_t row) const {
  RowBuffer buf;
  buf.bits = row_bits(row);
  return buf;
}

std::size_t Tile::write_row(std::size_t row, const RowBuffer& buffer, double pulse_fraction,
                            CompletionModel completion) {
  check_row(row);
  if (!pulse_completes(pulse_fraction, completion)) return 0;
  return masked_store(row_ptr(row), buffer.bits);
}

std::vector<std::uint8_t> Tile::snapshot() const {
  std::vector<std::uint8_t> bytes(cells_.size() * 8);
  for (std::size_t w = 0; w < cells_.size(); ++w) {
    for (std::size_t k = 0; k < 8; ++k) bytes[w * 8 + k] = std::uint8_t(cells_[w] >> (8 * k));
  }
  return bytes;
}

Tile Tile::from_snapshot(std::span<const std::uint8_t> bytes, CellVariant variant) {
  Tile t(variant);
  if (bytes.size() != t.cells_.size() * 8) {
    throw ArrayError(fmt::format("tile snapshot must be {} bytes, got {}", t.cells_.size() * 8,
                                 bytes.size()));
  }
  for (std::size_t w = 0; w < t.cells_.size(); ++w) {
    std::uint64_t v = 0;
    for (std::size_t k = 0; k < 8; ++k) v |= std::uint64_t(bytes[w * 8 + k]) << (8 * k);
    t.cells_[w] = v;
  }
  return t;
}

std::optional<std::pair<std::uint16_t, std::uint16_t>> Tile::first_difference(const Tile& other) const {
  for (std::size_t w = 0; w < cells_.size(); ++w) {
    const std::uint64_t diff = cells_[w] ^ other.cells_[w];
    if (diff != 0) {
      const std::size_t row = w / kWordsPerRow;
      const std::size_t col = (w % kWordsPerRow) * 64 + std::countr_zero(diff);
      return std::pair{std::uint16_t(row), std::uint16_t(col)};
    }
  }
  return std::nullopt;
}

}  // namespace spinpim
