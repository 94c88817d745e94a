#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "edgeshap/bitmatrix.hpp"
#include "edgeshap/common.hpp"
#include "edgeshap/rng.hpp"

namespace edgeshap {

// Kernel weight of coalition size s among n players, before normalization
// over sizes: (n - 1) / (s (n - s)). Symmetric in s <-> n - s and sharply
// peaked at the extremes, which is why small and large coalitions dominate
// every sampling budget.
inline double size_weight(int n, int s) {
  return static_cast<double>(n - 1) /
         (static_cast<double>(s) * static_cast<double>(n - s));
}

// The rank-th combination of r out of n elements in lexicographic order,
// ascending. rank counts from 0.
inline std::vector<int> unrank_combination(int n, int r, std::int64_t rank) {
  require(r >= 0 && r <= n, "unrank_combination: invalid r");
  require(rank >= 0 && rank < binom(n, r), "unrank_combination: rank out of range");
  std::vector<int> out;
  out.reserve(r);
  int v = 0;
  for (int j = 0; j < r; ++j) {
    for (;;) {
      std::int64_t with_v = binom(n - 1 - v, r - 1 - j);
      if (rank < with_v) {
        out.push_back(v++);
        break;
      }
      rank -= with_v;
      ++v;
    }
  }
  return out;
}

// Budget split across the first-half sizes c = 1 .. floor(n/2). Size
// n/2 (even n only) is its own complement class, so its capacity and
// weight are halved: the complement half of the plan supplies the other
// half of that size's combinations.
struct SampleAllocation {
  std::int64_t num_rows = 0;             // total rows after capping, even
  std::vector<std::int64_t> half_counts; // [c-1] rows of size c in the first half
  std::vector<bool> complete;            // [c-1] all combinations of c covered
};

namespace detail {

// Make `counts` sum to `target` by nudging the largest entries, largest
// first (ties: lowest index). Entries never go negative.
inline void fix_rounded_total(std::vector<std::int64_t>& counts,
                              std::int64_t target) {
  std::int64_t diff = target;
  for (std::int64_t c : counts) diff -= c;
  while (diff != 0) {
    std::size_t pick = 0;
    for (std::size_t i = 1; i < counts.size(); ++i)
      if (counts[i] > counts[pick]) pick = i;
    if (diff > 0) {
      counts[pick] += diff;
      diff = 0;
    } else {
      std::int64_t take = std::min(-diff, counts[pick]);
      counts[pick] -= take;
      diff += take;
      require(take > 0, "fix_rounded_total: cannot reach target");
    }
  }
}

}  // namespace detail

// Proportional allocation with enumeration overflow. Each size's share of
// the half-budget follows its kernel weight; any size whose share meets or
// exceeds its combination count is enumerated exactly, and the excess
// budget is re-split over the remaining larger sizes by weight. The sweep
// runs smallest size first so overflow ripples toward the middle.
inline SampleAllocation allocate_samples(int n, std::int64_t k) {
  require(n >= 2, "allocate_samples: need at least 2 players");
  require(k >= 2, "allocate_samples: need at least 2 samples");
  require(k % 2 == 0, "allocate_samples: sample count must be even");

  // 2^n - 2 distinct proper coalitions; beyond that extra rows are pure
  // duplicates, so the budget is capped.
  std::int64_t cap_total = std::numeric_limits<std::int64_t>::max();
  if (n < 62) cap_total = (std::int64_t{1} << n) - 2;
  const std::int64_t rows = std::min(k, cap_total);
  const std::int64_t half_budget = rows / 2;
  const int half = n / 2;

  std::vector<double> weight(half);
  std::vector<std::int64_t> cap(half);
  for (int c = 1; c <= half; ++c) {
    bool middle = (2 * c == n);
    weight[c - 1] = middle ? size_weight(n, c) / 2 : size_weight(n, c);
    cap[c - 1] = middle ? binom(n, c) / 2 : binom(n, c);
  }

  double weight_sum = 0.0;
  for (double w : weight) weight_sum += w;
  std::vector<std::int64_t> counts(half);
  for (int i = 0; i < half; ++i)
    counts[i] = round_half_up(half_budget * weight[i] / weight_sum);
  detail::fix_rounded_total(counts, half_budget);

  SampleAllocation alloc;
  alloc.num_rows = half_budget * 2;
  alloc.complete.assign(half, false);

  for (int i = 0; i < half; ++i) {
    if (counts[i] < cap[i]) continue;
    std::int64_t surplus = counts[i] - cap[i];
    counts[i] = cap[i];
    alloc.complete[i] = true;
    if (surplus == 0) continue;

    double future_weight = 0.0;
    for (int j = i + 1; j < half; ++j) future_weight += weight[j];
    require(future_weight > 0.0,
            "allocate_samples: surplus with no sizes left to absorb it");
    std::vector<std::int64_t> extra(half - i - 1);
    for (int j = i + 1; j < half; ++j)
      extra[j - i - 1] = round_half_up(surplus * weight[j] / future_weight);
    detail::fix_rounded_total(extra, surplus);
    for (int j = i + 1; j < half; ++j) counts[j] += extra[j - i - 1];
  }

  alloc.half_counts = std::move(counts);
  return alloc;
}

enum class Strategy { kAllSizes, kSmallLarge };

inline const char* to_string(Strategy s) {
  return s == Strategy::kAllSizes ? "all-sizes" : "small-large";
}

// A complete sampling plan: one mask row per coalition, its regression
// weight, and bookkeeping about which sizes were exhaustively enumerated.
// Row k/2 + i is always the bitwise complement of row i.
struct SamplePlan {
  int num_players = 0;
  std::int64_t num_samples = 0;
  Strategy strategy = Strategy::kAllSizes;
  std::uint64_t seed = 0;
  BitMatrix masks;
  std::vector<double> weights;
  std::vector<std::int64_t> size_counts;    // [s] rows of coalition size s
  std::vector<int> fully_enumerated_sizes;  // ascending
};

namespace detail {

// One contiguous block of first-half rows, all the same coalition size.
struct RowBlock {
  int size;
  std::int64_t begin;  // first-half row range [begin, end)
  std::int64_t end;
  bool lex;            // lexicographic ranks begin-relative; else random
  double row_weight;
};

// Partial Fisher-Yates scratch that resets in O(1) per row: an entry is
// only trusted when its stamp matches the current epoch, otherwise it
// reads as the identity permutation.
struct ShuffleScratch {
  std::vector<int> value;
  std::vector<std::int64_t> stamp;
  std::int64_t epoch = -1;

  void prepare(int n) {
    if (static_cast<int>(value.size()) != n) {
      value.assign(n, 0);
      stamp.assign(n, -1);
    }
  }
  int read(int i) const { return stamp[i] == epoch ? value[i] : i; }
  void write(int i, int v) {
    value[i] = v;
    stamp[i] = epoch;
  }
};

// Writes first-half row `i` of `block` into the mask, plus its complement
// row. Random rows are uniform c-subsets via partial Fisher-Yates, drawn
// from a stream keyed by the row index alone, so the result is
// independent of how rows are chunked across workers.
inline void emit_row(BitMatrix& masks, const RowBlock& block, std::int64_t i,
                     std::uint64_t seed, std::vector<int>& lex_scratch,
                     ShuffleScratch& shuffle) {
  const int n = static_cast<int>(masks.cols());
  const std::int64_t half = masks.rows() / 2;
  if (block.lex) {
    lex_scratch = unrank_combination(n, block.size, i - block.begin);
    for (int v : lex_scratch) masks.set(i, v);
  } else {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    shuffle.prepare(n);
    shuffle.epoch = i;
    for (int j = 0; j < block.size; ++j) {
      int t = j + static_cast<int>(
                      rng.next_below(static_cast<std::uint64_t>(n - j)));
      int vj = shuffle.read(j);
      int vt = shuffle.read(t);
      shuffle.write(j, vt);
      shuffle.write(t, vj);
      // Position j is final once swapped; later steps touch only >= j+1.
      masks.set(i, vt);
    }
  }
  masks.set_complement(half + i, i);
}

inline SamplePlan finish_plan(int n, std::uint64_t seed, Strategy strategy,
                              std::int64_t num_rows,
                              const std::vector<RowBlock>& blocks,
                              const std::vector<int>& enumerated_sizes,
                              int threads) {
  SamplePlan plan;
  plan.num_players = n;
  plan.num_samples = num_rows;
  plan.strategy = strategy;
  plan.seed = seed;
  plan.masks = BitMatrix(num_rows, n);
  plan.weights.assign(num_rows, 0.0);
  plan.size_counts.assign(n + 1, 0);
  plan.fully_enumerated_sizes = enumerated_sizes;

  const std::int64_t half = num_rows / 2;
  for (const RowBlock& b : blocks) {
    std::int64_t count = b.end - b.begin;
    plan.size_counts[b.size] += count;
    plan.size_counts[n - b.size] += count;
    for (std::int64_t i = b.begin; i < b.end; ++i) {
      plan.weights[i] = b.row_weight;
      plan.weights[half + i] = b.row_weight;
    }
  }

  parallel_chunks(half, threads, [&](int, std::int64_t begin, std::int64_t end) {
    std::vector<int> lex_scratch;
    ShuffleScratch shuffle;
    auto it = std::upper_bound(
        blocks.begin(), blocks.end(), begin,
        [](std::int64_t row, const RowBlock& b) { return row < b.end; });
    for (std::int64_t i = begin; i < end; ++i) {
      while (i >= it->end) ++it;
      emit_row(plan.masks, *it, i, seed, lex_scratch, shuffle);
    }
  });
  return plan;
}

}  // namespace detail

// Kernel-weighted plan over all coalition sizes. Enumerated sizes carry
// the exact per-combination kernel mass; sampled rows share the remaining
// mass uniformly, half per complement side. Weights sum to 1.
inline SamplePlan build_plan(int n, std::int64_t k, std::uint64_t seed,
                             int threads = 1) {
  require(k >= 4, "build_plan: need at least 4 samples");
  SampleAllocation alloc = allocate_samples(n, k);
  const int half = n / 2;

  double z = 0.0;
  for (int s = 1; s <= n - 1; ++s) z += size_weight(n, s);

  std::vector<detail::RowBlock> blocks;
  std::vector<int> enumerated;
  double enumerated_mass_half = 0.0;
  std::int64_t random_rows_half = 0;
  std::int64_t next_row = 0;
  for (int c = 1; c <= half; ++c) {
    std::int64_t count = alloc.half_counts[c - 1];
    if (count == 0) continue;
    bool complete = alloc.complete[c - 1];
    detail::RowBlock b;
    b.size = c;
    b.begin = next_row;
    b.end = next_row + count;
    b.lex = complete;
    b.row_weight = 0.0;  // filled below
    next_row = b.end;
    if (complete) {
      b.row_weight = size_weight(n, c) / (z * static_cast<double>(binom(n, c)));
      enumerated_mass_half += b.row_weight * static_cast<double>(count);
      enumerated.push_back(c);
      if (2 * c != n) enumerated.push_back(n - c);
    } else {
      random_rows_half += count;
    }
    blocks.push_back(b);
  }
  if (random_rows_half > 0) {
    double leftover = 0.5 - enumerated_mass_half;
    for (detail::RowBlock& b : blocks)
      if (!b.lex)
        b.row_weight = leftover / static_cast<double>(random_rows_half);
  }
  std::sort(enumerated.begin(), enumerated.end());

  return detail::finish_plan(n, seed, Strategy::kAllSizes, alloc.num_rows,
                             blocks, enumerated, threads);
}

// Baseline plan restricted to extreme coalition sizes 1..max_coalition and
// their complements, filled smallest size first by lexicographic rank.
// Weights are the per-combination kernel masses renormalized over the rows
// actually generated.
inline SamplePlan build_plan_small_large(int n, std::int64_t k,
                                         int max_coalition, std::uint64_t seed,
                                         int threads = 1) {
  require(n >= 2, "build_plan_small_large: need at least 2 players");
  require(k >= 2 && k % 2 == 0,
          "build_plan_small_large: sample count must be even and >= 2");
  require(max_coalition >= 1 && max_coalition <= n / 2,
          "build_plan_small_large: max_coalition must be in [1, n/2]");
  const int mc = max_coalition;

  double z = 0.0;
  for (int s = 1; s <= n - 1; ++s) z += size_weight(n, s);

  std::vector<detail::RowBlock> blocks;
  std::vector<int> enumerated;
  std::int64_t budget = k / 2;
  std::int64_t next_row = 0;
  double mass = 0.0;
  for (int c = 1; c <= mc && budget > 0; ++c) {
    // A size equal to its own complement (c == n/2, even n) owns half the
    // combinations; the complement side of the plan has the rest.
    std::int64_t capacity = (2 * c == n) ? binom(n, c) / 2 : binom(n, c);
    std::int64_t take = std::min(budget, capacity);
    detail::RowBlock b;
    b.size = c;
    b.begin = next_row;
    b.end = next_row + take;
    b.lex = true;
    b.row_weight = size_weight(n, c) / (z * static_cast<double>(binom(n, c)));
    blocks.push_back(b);
    if (take == capacity) {
      enumerated.push_back(c);
      if (2 * c != n) enumerated.push_back(n - c);
    }
    mass += b.row_weight * static_cast<double>(take);
    next_row = b.end;
    budget -= take;
  }
  require(next_row > 0, "build_plan_small_large: empty plan");

  // Renormalize so the generated rows' weights sum to 1 (both halves).
  double scale = 1.0 / (2.0 * mass);
  for (detail::RowBlock& b : blocks) b.row_weight *= scale;
  std::sort(enumerated.begin(), enumerated.end());

  return detail::finish_plan(n, seed, Strategy::kSmallLarge, next_row * 2,
                             blocks, enumerated, threads);
}

// Debug dump: one CSV line per row with its popcount and weight.
inline void dump_plan_csv(const SamplePlan& plan, std::ostream& out) {
  out << "row,popcount,weight\n";
  for (std::int64_t i = 0; i < plan.num_samples; ++i)
    out << i << "," << plan.masks.popcount_row(i) << "," << plan.weights[i]
        << "\n";
}

// Debug dump: the raw mask bits, row-major, each row padded to whole bytes.
inline void dump_plan_bits(const SamplePlan& plan, std::ostream& out) {
  const std::int64_t bytes_per_row = (plan.num_players + 7) / 8;
  for (std::int64_t i = 0; i < plan.num_samples; ++i) {
    const std::uint64_t* row = plan.masks.row(i);
    for (std::int64_t b = 0; b < bytes_per_row; ++b) {
      const std::uint8_t byte =
          static_cast<std::uint8_t>(row[b >> 3] >> ((b & 7) * 8));
      out.put(static_cast<char>(byte));
    }
  }
}

}  // namespace edgeshap
