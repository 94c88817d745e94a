#pragma once

// Slow, straight-line re-derivation of the sampling plan, used by the tests
// as an oracle for the production sampler. Everything here favors obviousness
// over speed: coalitions are membership-flag vectors, lexicographic blocks
// come from an explicit next-combination generator rather than unranking,
// shuffles use a materialized identity array, and nothing is parallel.
//
// The production path and this one intentionally share two pinned contracts:
// the counter RNG (stream = first-half row index) and the plain-double
// formulas for proportional budget shares. Both are part of the sampling
// scheme's definition, not implementation details, so the oracle must use
// the same ones.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "edgeshap/rng.hpp"

namespace refsampler {

inline long long choose(int n, int r) {
  if (r < 0 || r > n) return 0;
  if (r > n - r) r = n - r;
  unsigned __int128 acc = 1;
  const unsigned __int128 limit = std::numeric_limits<long long>::max() / 2;
  for (int i = 1; i <= r; ++i) {
    acc = acc * static_cast<unsigned>(n - r + i) / static_cast<unsigned>(i);
    if (acc > limit) return std::numeric_limits<long long>::max() / 2;
  }
  return static_cast<long long>(acc);
}

inline double kernel_weight(int n, int s) {
  return static_cast<double>(n - 1) /
         (static_cast<double>(s) * static_cast<double>(n - s));
}

// Advance `comb` (ascending members out of n) to the next combination in
// lexicographic order. Returns false after the last one.
inline bool next_combination(std::vector<int>& comb, int n) {
  const int r = static_cast<int>(comb.size());
  int i = r - 1;
  while (i >= 0 && comb[i] == n - r + i) --i;
  if (i < 0) return false;
  ++comb[i];
  for (int j = i + 1; j < r; ++j) comb[j] = comb[j - 1] + 1;
  return true;
}

inline long long round_half_up(double x) {
  return static_cast<long long>(std::floor(x + 0.5));
}

// "Make the counts sum to the budget by adjusting the largest bin",
// spilling to the next-largest when one bin cannot absorb a deficit.
inline void repair_total(std::vector<long long>& counts, long long target) {
  long long have = std::accumulate(counts.begin(), counts.end(), 0LL);
  while (have != target) {
    std::size_t big = 0;
    for (std::size_t i = 1; i < counts.size(); ++i)
      if (counts[i] > counts[big]) big = i;
    if (have < target) {
      counts[big] += target - have;
      have = target;
    } else {
      long long drop = std::min(have - target, counts[big]);
      counts[big] -= drop;
      have -= drop;
    }
  }
}

struct Allocation {
  long long total_rows = 0;
  std::vector<long long> first_half_counts;  // index c-1 for size c
  std::vector<bool> complete;
};

inline Allocation allocate(int n, long long k) {
  Allocation out;
  long long distinct = n < 62 ? (1LL << n) - 2 : std::numeric_limits<long long>::max();
  long long rows = std::min(k, distinct);
  long long budget = rows / 2;
  out.total_rows = budget * 2;

  const int half = n / 2;
  std::vector<double> w(half);
  std::vector<long long> capacity(half);
  for (int c = 1; c <= half; ++c) {
    w[c - 1] = kernel_weight(n, c);
    capacity[c - 1] = choose(n, c);
    if (2 * c == n) {
      w[c - 1] /= 2;
      capacity[c - 1] /= 2;
    }
  }

  double w_total = 0.0;
  for (double x : w) w_total += x;
  std::vector<long long> counts(half);
  for (int i = 0; i < half; ++i)
    counts[i] = round_half_up(budget * w[i] / w_total);
  repair_total(counts, budget);

  out.complete.assign(half, false);
  for (int i = 0; i < half; ++i) {
    if (counts[i] < capacity[i]) continue;
    long long surplus = counts[i] - capacity[i];
    counts[i] = capacity[i];
    out.complete[i] = true;
    if (surplus == 0) continue;
    double future = 0.0;
    for (int j = i + 1; j < half; ++j) future += w[j];
    std::vector<long long> extra(half - i - 1);
    for (int j = i + 1; j < half; ++j)
      extra[j - i - 1] = round_half_up(surplus * w[j] / future);
    repair_total(extra, surplus);
    for (int j = i + 1; j < half; ++j) counts[j] += extra[j - i - 1];
  }
  out.first_half_counts = counts;
  return out;
}

struct Row {
  std::vector<char> member;  // length n
  double weight = 0.0;
};

struct Plan {
  int n = 0;
  std::vector<Row> rows;
  std::vector<long long> counts_by_size;  // index s in 0..n
  std::vector<int> complete_sizes;        // ascending
};

inline std::vector<char> random_coalition(int n, int size, std::uint64_t seed,
                                          long long row_index) {
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  edgeshap::CounterRng rng(seed, static_cast<std::uint64_t>(row_index));
  for (int j = 0; j < size; ++j) {
    int t = j + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - j)));
    std::swap(ids[j], ids[t]);
  }
  std::vector<char> member(n, 0);
  for (int j = 0; j < size; ++j) member[ids[j]] = 1;
  return member;
}

inline Plan all_sizes_plan(int n, long long k, std::uint64_t seed) {
  Allocation alloc = allocate(n, k);
  const int half = n / 2;
  const long long half_rows = alloc.total_rows / 2;

  double z = 0.0;
  for (int s = 1; s <= n - 1; ++s) z += kernel_weight(n, s);

  Plan plan;
  plan.n = n;
  plan.rows.resize(alloc.total_rows);
  plan.counts_by_size.assign(n + 1, 0);

  double complete_mass = 0.0;
  long long random_rows = 0;
  for (int c = 1; c <= half; ++c) {
    long long count = alloc.first_half_counts[c - 1];
    if (alloc.complete[c - 1]) {
      complete_mass +=
          count * (kernel_weight(n, c) / (z * static_cast<double>(choose(n, c))));
      plan.complete_sizes.push_back(c);
      if (2 * c != n) plan.complete_sizes.push_back(n - c);
    } else {
      random_rows += count;
    }
  }
  std::sort(plan.complete_sizes.begin(), plan.complete_sizes.end());
  const double random_weight =
      random_rows > 0 ? (0.5 - complete_mass) / static_cast<double>(random_rows)
                      : 0.0;

  long long next = 0;
  for (int c = 1; c <= half; ++c) {
    long long count = alloc.first_half_counts[c - 1];
    if (count == 0) continue;
    if (alloc.complete[c - 1]) {
      const double w =
          kernel_weight(n, c) / (z * static_cast<double>(choose(n, c)));
      std::vector<int> comb(c);
      std::iota(comb.begin(), comb.end(), 0);
      for (long long i = 0; i < count; ++i) {
        Row& row = plan.rows[next];
        row.member.assign(n, 0);
        for (int v : comb) row.member[v] = 1;
        row.weight = w;
        ++next;
        if (i + 1 < count) next_combination(comb, n);
      }
    } else {
      for (long long i = 0; i < count; ++i) {
        Row& row = plan.rows[next];
        row.member = random_coalition(n, c, seed, next);
        row.weight = random_weight;
        ++next;
      }
    }
  }
  for (long long i = 0; i < half_rows; ++i) {
    Row& comp = plan.rows[half_rows + i];
    comp.member.resize(n);
    for (int v = 0; v < n; ++v) comp.member[v] = !plan.rows[i].member[v];
    comp.weight = plan.rows[i].weight;
  }
  for (const Row& row : plan.rows) {
    int s = 0;
    for (char m : row.member) s += m;
    ++plan.counts_by_size[s];
  }
  return plan;
}

// The seed mirrors the production call shape but the small-large plan is
// fully lexicographic, so it is never consumed.
inline Plan small_large_plan(int n, long long k, int max_coalition,
                             std::uint64_t /*seed*/) {
  double z = 0.0;
  for (int s = 1; s <= n - 1; ++s) z += kernel_weight(n, s);

  struct Block {
    int size;
    long long take;
    double weight;
  };
  std::vector<Block> blocks;
  long long budget = k / 2;
  double mass = 0.0;
  Plan plan;
  plan.n = n;
  for (int c = 1; c <= max_coalition && budget > 0; ++c) {
    long long capacity = choose(n, c);
    if (2 * c == n) capacity /= 2;
    long long take = std::min(budget, capacity);
    double w = kernel_weight(n, c) / (z * static_cast<double>(choose(n, c)));
    blocks.push_back({c, take, w});
    if (take == capacity) {
      plan.complete_sizes.push_back(c);
      if (2 * c != n) plan.complete_sizes.push_back(n - c);
    }
    mass += w * static_cast<double>(take);
    budget -= take;
  }
  std::sort(plan.complete_sizes.begin(), plan.complete_sizes.end());
  const double scale = 1.0 / (2.0 * mass);

  long long half_rows = 0;
  for (const Block& b : blocks) half_rows += b.take;
  plan.rows.resize(half_rows * 2);
  plan.counts_by_size.assign(n + 1, 0);

  long long next = 0;
  for (const Block& b : blocks) {
    std::vector<int> comb(b.size);
    std::iota(comb.begin(), comb.end(), 0);
    for (long long i = 0; i < b.take; ++i) {
      Row& row = plan.rows[next];
      row.member.assign(n, 0);
      for (int v : comb) row.member[v] = 1;
      row.weight = b.weight * scale;
      ++next;
      if (i + 1 < b.take) next_combination(comb, n);
    }
  }
  for (long long i = 0; i < half_rows; ++i) {
    Row& comp = plan.rows[half_rows + i];
    comp.member.resize(n);
    for (int v = 0; v < n; ++v) comp.member[v] = !plan.rows[i].member[v];
    comp.weight = plan.rows[i].weight;
  }
  for (const Row& row : plan.rows) {
    int s = 0;
    for (char m : row.member) s += m;
    ++plan.counts_by_size[s];
  }
  return plan;
}

}  // namespace refsampler
