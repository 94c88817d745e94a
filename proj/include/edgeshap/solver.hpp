#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "edgeshap/bitmatrix.hpp"
#include "edgeshap/common.hpp"

namespace edgeshap {

// Attributions come from the weighted least squares fit
//   y_i ~ base + sum_{j in coalition i} phi_j
// with per-row kernel weights. The efficiency property (attributions sum
// to full - base) is enforced through a single heavily weighted all-ones
// row rather than an explicit constraint, which keeps both solve routes
// plain SPD systems. A tiny ridge proportional to the mean diagonal keeps
// the normal matrix well posed when rows are rank deficient (tiny plans,
// duplicated coalitions).

struct SolveStats {
  int iterations = 0;      // CG only
  double residual = 0.0;   // CG only, relative
};

namespace detail {

// The anchor leaves a structural efficiency violation of (constraint
// force)/(anchor weight), so the boost sets how exactly attributions sum
// to full - base. 1e8 holds the gap below 1e-7 on model games while the
// extra stiffness costs nothing: the anchor adds a single outlying
// eigenvalue, which conjugate gradients absorbs in about one iteration
// and the dense route handles well inside double precision.
constexpr double kAnchorBoost = 1e8;
constexpr double kRidgeScale = 1e-10;

// Shared assembly of the normal equations' right-hand side, anchor weight
// and ridge. trace(M^T W M) is sum_i w_i |row_i| since mask entries are
// 0/1.
//
// Both routes solve for the deviation from the equal split
// (full - base)/n rather than for the attributions themselves. The
// substitution leaves the minimizer unchanged but zeroes the anchor's
// right-hand-side payload, which would otherwise dominate the rhs by the
// boost factor and cost the dense route digits and the conjugate-gradient
// route its grip on the convergence test (its tolerance is relative to
// the rhs norm).
struct NormalParts {
  double anchor_weight = 0.0;
  double ridge = 0.0;
  double shift = 0.0;       // equal split, added back after the solve
  std::vector<double> rhs;  // M^T W (y - base - |row| * shift) + anchor term
};

inline NormalParts normal_parts(const BitMatrix& masks,
                                std::span<const double> weights,
                                std::span<const double> values, double base,
                                double full) {
  const std::int64_t rows = masks.rows();
  const int n = static_cast<int>(masks.cols());
  NormalParts parts;

  double max_w = 0.0;
  double trace = 0.0;
  for (std::int64_t i = 0; i < rows; ++i) {
    max_w = std::max(max_w, weights[i]);
    trace += weights[i] * static_cast<double>(masks.popcount_row(i));
  }
  parts.anchor_weight = kAnchorBoost * max_w;
  parts.ridge = kRidgeScale * trace / std::max(1, n);
  parts.shift = (full - base) / n;

  parts.rhs.assign(n, 0.0);
  for (std::int64_t i = 0; i < rows; ++i) {
    const double size = static_cast<double>(masks.popcount_row(i));
    const double wy = weights[i] * (values[i] - base - size * parts.shift);
    if (wy == 0.0) continue;
    const std::uint64_t* row = masks.row(i);
    for (int w = 0; w < masks.words_per_row(); ++w) {
      std::uint64_t bits = row[w];
      while (bits) {
        int j = w * 64 + std::countr_zero(bits);
        bits &= bits - 1;
        parts.rhs[j] += wy;
      }
    }
  }
  // n * shift only misses full - base by rounding, so this term is at most
  // a few ulps of the anchor scale; kept for exactness of the algebra.
  const double anchor_rhs =
      parts.anchor_weight * (full - base - n * parts.shift);
  if (anchor_rhs != 0.0)
    for (int j = 0; j < n; ++j) parts.rhs[j] += anchor_rhs;
  return parts;
}

}  // namespace detail

// Direct dense solve of the normal equations. Builds M^T W M by blocked
// rank updates on sqrt(W)-scaled rows and factors with Cholesky (LDLT
// fallback if the ridge-stabilized matrix is still borderline).
inline std::vector<double> solve_wls(const BitMatrix& masks,
                                     std::span<const double> weights,
                                     std::span<const double> values,
                                     double base, double full) {
  const std::int64_t rows = masks.rows();
  const int n = static_cast<int>(masks.cols());
  require(rows > 0 && n > 0, "solve_wls: empty system");
  require(static_cast<std::int64_t>(weights.size()) == rows &&
              static_cast<std::int64_t>(values.size()) == rows,
          "solve_wls: weight/value count != mask rows");

  detail::NormalParts parts = detail::normal_parts(masks, weights, values, base, full);

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  constexpr std::int64_t kBlock = 256;
  Eigen::MatrixXd block(kBlock, n);
  for (std::int64_t b = 0; b < rows; b += kBlock) {
    const std::int64_t stop = std::min(rows, b + kBlock);
    const std::int64_t len = stop - b;
    block.setZero(len, n);
    for (std::int64_t i = b; i < stop; ++i) {
      const double sw = std::sqrt(weights[i]);
      const std::uint64_t* row = masks.row(i);
      for (int w = 0; w < masks.words_per_row(); ++w) {
        std::uint64_t bits = row[w];
        while (bits) {
          int j = w * 64 + std::countr_zero(bits);
          bits &= bits - 1;
          block(i - b, j) = sw;
        }
      }
    }
    a.selfadjointView<Eigen::Lower>().rankUpdate(block.topRows(len).transpose(),
                                                 1.0);
  }
  a = a.selfadjointView<Eigen::Lower>();
  a.array() += parts.anchor_weight;  // anchor row is all ones
  a.diagonal().array() += parts.ridge;

  Eigen::Map<const Eigen::VectorXd> rhs(parts.rhs.data(), n);
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  Eigen::VectorXd x;
  if (llt.info() == Eigen::Success) {
    x = llt.solve(rhs);
  } else {
    x = Eigen::LDLT<Eigen::MatrixXd>(a).solve(rhs);
  }
  x.array() += parts.shift;
  return {x.data(), x.data() + n};
}

// Matrix-free conjugate gradient on the same normal equations, with a
// Jacobi preconditioner. Never materializes an n x n matrix, so it scales
// to player counts where the dense route would not. Deliberately does not
// share any linear algebra with solve_wls: the two routes cross-check each
// other in the tests.
inline std::vector<double> solve_iterative(const BitMatrix& masks,
                                           std::span<const double> weights,
                                           std::span<const double> values,
                                           double base, double full,
                                           double tol = 1e-13,
                                           int max_iters = 0,
                                           SolveStats* stats = nullptr) {
  const std::int64_t rows = masks.rows();
  const int n = static_cast<int>(masks.cols());
  require(rows > 0 && n > 0, "solve_iterative: empty system");
  if (max_iters <= 0) max_iters = std::max(200, 4 * n);

  detail::NormalParts parts = detail::normal_parts(masks, weights, values, base, full);

  // diag(A) for the preconditioner: column sums of w over set bits, plus
  // anchor and ridge.
  std::vector<double> diag(n, parts.anchor_weight + parts.ridge);
  for (std::int64_t i = 0; i < rows; ++i) {
    const std::uint64_t* row = masks.row(i);
    for (int w = 0; w < masks.words_per_row(); ++w) {
      std::uint64_t bits = row[w];
      while (bits) {
        int j = w * 64 + std::countr_zero(bits);
        bits &= bits - 1;
        diag[j] += weights[i];
      }
    }
  }

  auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    out.assign(n, 0.0);
    double vsum = 0.0;
    for (int j = 0; j < n; ++j) vsum += v[j];
    for (std::int64_t i = 0; i < rows; ++i) {
      const std::uint64_t* row = masks.row(i);
      double dot = 0.0;
      for (int w = 0; w < masks.words_per_row(); ++w) {
        std::uint64_t bits = row[w];
        while (bits) {
          int j = w * 64 + std::countr_zero(bits);
          bits &= bits - 1;
          dot += v[j];
        }
      }
      const double scaled = weights[i] * dot;
      if (scaled == 0.0) continue;
      for (int w = 0; w < masks.words_per_row(); ++w) {
        std::uint64_t bits = row[w];
        while (bits) {
          int j = w * 64 + std::countr_zero(bits);
          bits &= bits - 1;
          out[j] += scaled;
        }
      }
    }
    const double anchor = parts.anchor_weight * vsum;
    for (int j = 0; j < n; ++j) out[j] += anchor + parts.ridge * v[j];
  };

  std::vector<double> x(n, 0.0), r = parts.rhs, z(n), p(n), ap(n);
  double rhs_norm = 0.0;
  for (double v : r) rhs_norm += v * v;
  rhs_norm = std::sqrt(rhs_norm);
  if (rhs_norm == 0.0) {
    for (double& v : x) v += parts.shift;
    return x;
  }

  for (int j = 0; j < n; ++j) z[j] = r[j] / diag[j];
  p = z;
  double rz = 0.0;
  for (int j = 0; j < n; ++j) rz += r[j] * z[j];

  int it = 0;
  double rel = 1.0;
  for (; it < max_iters; ++it) {
    apply(p, ap);
    double pap = 0.0;
    for (int j = 0; j < n; ++j) pap += p[j] * ap[j];
    if (pap <= 0.0) break;
    const double alpha = rz / pap;
    for (int j = 0; j < n; ++j) {
      x[j] += alpha * p[j];
      r[j] -= alpha * ap[j];
    }
    double rnorm = 0.0;
    for (double v : r) rnorm += v * v;
    rel = std::sqrt(rnorm) / rhs_norm;
    if (rel < tol) {
      ++it;
      break;
    }
    for (int j = 0; j < n; ++j) z[j] = r[j] / diag[j];
    double rz_next = 0.0;
    for (int j = 0; j < n; ++j) rz_next += r[j] * z[j];
    const double beta = rz_next / rz;
    rz = rz_next;
    for (int j = 0; j < n; ++j) p[j] = z[j] + beta * p[j];
  }
  if (stats) {
    stats->iterations = it;
    stats->residual = rel;
  }
  for (double& v : x) v += parts.shift;
  return x;
}

// A coalition value function for exact computation: bit i of the mask is
// player i's membership.
using Game = std::function<double(std::uint64_t)>;

// Exact attribution by full enumeration, the ground truth the sampled
// estimates are tested against. Cost is 2^n game evaluations; refuses
// n > 20.
inline std::vector<double> exact_shapley(int n, const Game& game) {
  require(n >= 1, "exact_shapley: need at least one player");
  require(n <= 20, "exact_shapley: player count too large for enumeration");

  const std::uint64_t total = std::uint64_t{1} << n;
  std::vector<double> value(total);
  for (std::uint64_t m = 0; m < total; ++m) value[m] = game(m);

  // weight[s] = s! (n-s-1)! / n!
  std::vector<long double> factorial(n + 1, 1.0L);
  for (int i = 1; i <= n; ++i) factorial[i] = factorial[i - 1] * i;
  std::vector<long double> weight(n);
  for (int s = 0; s < n; ++s)
    weight[s] = factorial[s] * factorial[n - 1 - s] / factorial[n];

  std::vector<long double> phi(n, 0.0L);
  for (std::uint64_t m = 0; m < total; ++m) {
    const int s = std::popcount(m);
    for (int i = 0; i < n; ++i) {
      if ((m >> i) & 1u) continue;
      phi[i] += weight[s] * (value[m | (std::uint64_t{1} << i)] - value[m]);
    }
  }
  return {phi.begin(), phi.end()};
}

}  // namespace edgeshap
