#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "edgeshap/bitmatrix.hpp"
#include "edgeshap/common.hpp"
#include "edgeshap/explain.hpp"
#include "edgeshap/gcn.hpp"

namespace edgeshap {

namespace detail {

// Player indices ordered by importance: |phi| descending, then player
// index ascending so ties are deterministic. Both selection rules read
// from this one ranking.
inline std::vector<int> importance_order(const std::vector<double>& phi) {
  std::vector<int> order(phi.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&phi](int a, int b) {
    return std::abs(phi[a]) > std::abs(phi[b]);
  });
  return order;
}

}  // namespace detail

// The k most important players (largest |phi|), ascending index order.
inline std::vector<int> select_topk(const Explanation& ex, int k) {
  const int n = ex.num_players();
  require(k >= 1 && k <= n,
          "select_topk: k must be in [1, " + std::to_string(n) + "]");
  std::vector<int> order = detail::importance_order(ex.phi);
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

// Drops the floor(sparsity * n) least important players and returns the
// retained set, ascending index order.
inline std::vector<int> select_sparsity(const Explanation& ex, double sparsity) {
  require(sparsity >= 0.0 && sparsity < 1.0,
          "select_sparsity: sparsity must be in [0, 1)");
  const int n = ex.num_players();
  const int drop = static_cast<int>(std::floor(sparsity * n));
  std::vector<int> order = detail::importance_order(ex.phi);
  order.resize(n - drop);
  std::sort(order.begin(), order.end());
  return order;
}

struct FidelityReport {
  struct PerNode {
    NodeId node = 0;
    double f_gc = 0.0;          // all players present
    double f_gs = 0.0;          // retained players only
    double f_gc_minus_s = 0.0;  // most important players removed
    int n_players = 0;
  };

  std::int64_t node_count = 0;
  double fidelity_minus = 0.0;
  double fidelity_plus = 0.0;
  double sparsity = 0.0;
  int top_k = 0;
  std::vector<PerNode> per_node;
};

namespace detail {

inline double masked_class_prob(const MaskedPredictor& predictor, int n,
                                const std::vector<int>& kept, int cls) {
  BitMatrix row(1, n);
  for (int j : kept) row.set(0, j);
  return predictor.predict_probs(row.row(0))[cls];
}

}  // namespace detail

// Joint fidelity evaluation on each explanation's pruned computational
// graph, masking players in and out; the global graph is never touched.
// Drop-the-least-important (sparsity) drives f(G_S); remove-the-top-k
// drives f(G_C \ S). top_k is clamped to each node's player count;
// top_k == 0 means no removal.
inline FidelityReport evaluate_fidelity(const GcnModel& model,
                                        const FeatureMatrix& feats,
                                        const std::vector<Explanation>& expls,
                                        double sparsity, int top_k,
                                        int threads = 1) {
  require(top_k >= 0, "evaluate_fidelity: top_k must be >= 0");
  FidelityReport report;
  report.node_count = static_cast<std::int64_t>(expls.size());
  report.sparsity = sparsity;
  report.top_k = top_k;
  report.per_node.resize(expls.size());

  parallel_chunks(
      static_cast<std::int64_t>(expls.size()), threads,
      [&](int, std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) {
          const Explanation& ex = expls[i];
          const int n = ex.num_players();
          MaskedPredictor predictor(model, ex.comp, feats, ex.norm);

          FidelityReport::PerNode& row = report.per_node[i];
          row.node = ex.node;
          row.n_players = n;
          row.f_gc = ex.full_value;

          std::vector<int> retained = select_sparsity(ex, sparsity);
          row.f_gs = detail::masked_class_prob(predictor, n, retained,
                                               ex.explained_class);

          const int k = std::min(top_k, n);
          if (k == 0) {
            row.f_gc_minus_s = row.f_gc;
          } else {
            std::vector<int> top = select_topk(ex, k);
            std::vector<int> rest;
            rest.reserve(n - k);
            std::vector<char> removed(n, 0);
            for (int j : top) removed[j] = 1;
            for (int j = 0; j < n; ++j)
              if (!removed[j]) rest.push_back(j);
            row.f_gc_minus_s = detail::masked_class_prob(predictor, n, rest,
                                                         ex.explained_class);
          }
        }
      });

  double minus = 0.0, plus = 0.0;
  for (const auto& row : report.per_node) {
    minus += std::abs(row.f_gc - row.f_gs);
    plus += std::abs(row.f_gc - row.f_gc_minus_s);
  }
  if (!report.per_node.empty()) {
    minus /= static_cast<double>(report.per_node.size());
    plus /= static_cast<double>(report.per_node.size());
  }
  report.fidelity_minus = minus;
  report.fidelity_plus = plus;
  return report;
}

// Mean absolute prediction change from dropping the least important
// players; small is good.
inline FidelityReport fidelity_minus(const GcnModel& model,
                                     const FeatureMatrix& feats,
                                     const std::vector<Explanation>& expls,
                                     double sparsity, int threads = 1) {
  return evaluate_fidelity(model, feats, expls, sparsity, 0, threads);
}

// Mean absolute prediction change from removing the top-k players; large
// is good.
inline FidelityReport fidelity_plus(const GcnModel& model,
                                    const FeatureMatrix& feats,
                                    const std::vector<Explanation>& expls,
                                    int top_k, int threads = 1) {
  return evaluate_fidelity(model, feats, expls, 0.0, top_k, threads);
}

// Effect of deleting every negative-attribution player: per node the
// predicted-class probability before (all players) and after (non-negative
// players only), plus the fraction of nodes that did not get worse.
struct ConfidenceStudy {
  struct Entry {
    NodeId node = 0;
    double before = 0.0;
    double after = 0.0;
  };
  std::vector<Entry> per_node;
  double improved_fraction = 0.0;  // after - before >= 0
};

inline ConfidenceStudy confidence_improvement(
    const GcnModel& model, const FeatureMatrix& feats,
    const std::vector<Explanation>& expls, int threads = 1) {
  ConfidenceStudy study;
  study.per_node.resize(expls.size());

  parallel_chunks(
      static_cast<std::int64_t>(expls.size()), threads,
      [&](int, std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) {
          const Explanation& ex = expls[i];
          MaskedPredictor predictor(model, ex.comp, feats, ex.norm);
          std::vector<int> kept;
          for (int j = 0; j < ex.num_players(); ++j)
            if (ex.phi[j] >= 0.0) kept.push_back(j);
          study.per_node[i] = {
              ex.node, ex.full_value,
              detail::masked_class_prob(predictor, ex.num_players(), kept,
                                        ex.explained_class)};
        }
      });

  std::int64_t improved = 0;
  for (const auto& e : study.per_node)
    if (e.after - e.before >= 0.0) ++improved;
  if (!study.per_node.empty())
    study.improved_fraction = static_cast<double>(improved) /
                              static_cast<double>(study.per_node.size());
  return study;
}

}  // namespace edgeshap
