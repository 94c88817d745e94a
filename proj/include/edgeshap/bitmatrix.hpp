#pragma once

#include <bit>
#include <cstdint>
#include <vector>

#include "edgeshap/common.hpp"

namespace edgeshap {

// Dense row-major bit matrix used for coalition masks: one row per sample,
// one column per player. Unused tail bits of the last word in each row are
// kept zero so whole-word operations (complement, popcount, prefix tests)
// need no per-bit loop.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::int64_t rows, std::int64_t cols)
      : rows_(rows),
        cols_(cols),
        words_per_row_((cols + 63) / 64),
        words_(static_cast<std::size_t>(rows * words_per_row_), 0) {
    require(rows >= 0 && cols >= 0, "BitMatrix: negative shape");
  }

  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }
  std::int64_t words_per_row() const { return words_per_row_; }

  const std::uint64_t* row(std::int64_t r) const {
    return words_.data() + r * words_per_row_;
  }
  std::uint64_t* row(std::int64_t r) { return words_.data() + r * words_per_row_; }

  void set(std::int64_t r, std::int64_t c) {
    row(r)[c >> 6] |= (1ull << (c & 63));
  }
  bool get(std::int64_t r, std::int64_t c) const {
    return (row(r)[c >> 6] >> (c & 63)) & 1u;
  }

  // dst := bitwise complement of src over the first cols() bits.
  void set_complement(std::int64_t dst, std::int64_t src) {
    const std::uint64_t* s = row(src);
    std::uint64_t* d = row(dst);
    for (std::int64_t w = 0; w < words_per_row_; ++w) d[w] = ~s[w];
    if (cols_ & 63) d[words_per_row_ - 1] &= (1ull << (cols_ & 63)) - 1;
  }

  std::int64_t popcount_row(std::int64_t r) const {
    const std::uint64_t* p = row(r);
    std::int64_t total = 0;
    for (std::int64_t w = 0; w < words_per_row_; ++w)
      total += std::popcount(p[w]);
    return total;
  }

  // True if any of bits [0, count) is set in row r.
  bool any_in_prefix(std::int64_t r, std::int64_t count) const {
    const std::uint64_t* p = row(r);
    std::int64_t full = count >> 6;
    for (std::int64_t w = 0; w < full; ++w)
      if (p[w]) return true;
    if (count & 63)
      if (p[full] & ((1ull << (count & 63)) - 1)) return true;
    return false;
  }

  bool rows_equal(std::int64_t a, std::int64_t b) const {
    const std::uint64_t* pa = row(a);
    const std::uint64_t* pb = row(b);
    for (std::int64_t w = 0; w < words_per_row_; ++w)
      if (pa[w] != pb[w]) return false;
    return true;
  }

 private:
  std::int64_t rows_ = 0;
  std::int64_t cols_ = 0;
  std::int64_t words_per_row_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace edgeshap
