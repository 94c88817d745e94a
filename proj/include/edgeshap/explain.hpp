#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edgeshap/common.hpp"
#include "edgeshap/comp_graph.hpp"
#include "edgeshap/gcn.hpp"
#include "edgeshap/graph.hpp"
#include "edgeshap/sampler.hpp"
#include "edgeshap/solver.hpp"
#include "edgeshap/tensor_archive.hpp"

namespace edgeshap {

struct ExplainOptions {
  int num_layers = 2;
  std::int64_t num_samples = 10000;
  Strategy strategy = Strategy::kAllSizes;
  int max_coalition = 5;  // small-large strategy only
  std::int64_t batch_size = 1024;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: EDGESHAP_THREADS env, then hardware
  NormalizationMode norm = NormalizationMode::kCoalition;
  bool force_iterative = false;
  // Player counts above this use the matrix-free solver; the dense normal
  // matrix would need n^2 doubles.
  int dense_solver_limit = 5000;
};

struct Explanation {
  NodeId node = 0;
  int explained_class = 0;
  double base_value = 0.0;  // empty coalition
  double full_value = 0.0;  // all players present
  std::vector<Edge> players;  // global (src, dst), same order as phi
  std::vector<double> phi;
  CompGraph comp;  // local structure, kept for downstream evaluation

  std::int64_t num_samples = 0;
  Strategy strategy = Strategy::kAllSizes;
  std::uint64_t seed = 0;
  NormalizationMode norm = NormalizationMode::kCoalition;
  std::int64_t pruned_predictions = 0;

  struct Timings {
    double prune_ms = 0.0;
    double sample_ms = 0.0;
    double predict_ms = 0.0;
    double solve_ms = 0.0;
  } timings;

  int num_players() const { return static_cast<int>(players.size()); }
};

namespace detail {

class StopWatch {
 public:
  double lap_ms() {
    auto now = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace detail

// Whole-graph softmax probabilities at one node. Evaluated on the node's
// pruned computational graph with whole-graph degrees, which yields
// exactly the unpruned model output: dropped edges cannot reach the target
// within the receptive field and degrees are the same by construction.
inline std::vector<double> whole_graph_probs(const Graph& g,
                                             const FeatureMatrix& feats,
                                             const GcnModel& model,
                                             NodeId target, int num_layers) {
  CompGraph comp = extract_pruned(g, target, num_layers);
  MaskedPredictor predictor(model, comp, feats, NormalizationMode::kFullGraph);
  return predictor.full_probs();
}

// Shapley attribution of every player edge in `target`'s computational
// graph, for the model's predicted class.
inline Explanation explain_node(const Graph& g, const FeatureMatrix& feats,
                                const GcnModel& model, NodeId target,
                                const ExplainOptions& opt) {
  const int threads = resolve_threads(opt.threads);
  detail::StopWatch watch;

  Explanation ex;
  ex.node = target;
  ex.strategy = opt.strategy;
  ex.seed = opt.seed;
  ex.norm = opt.norm;

  ex.comp = extract_pruned(g, target, opt.num_layers);
  const int n = ex.comp.num_players();
  require(n >= 2, "explain_node: node " + std::to_string(target) + " has " +
                      std::to_string(n) +
                      " candidate edge(s); need at least 2 to attribute");
  ex.players.reserve(n);
  for (int i = 0; i < n; ++i) ex.players.push_back(ex.comp.player_global(i));
  ex.timings.prune_ms = watch.lap_ms();

  // The size cap only makes sense up to n/2 (larger caps add nothing, and
  // tiny neighborhoods would otherwise reject a cap meant for big ones), so
  // clamp per node. The sampler itself stays strict about its input.
  const int cap = std::max(1, std::min(opt.max_coalition, n / 2));
  SamplePlan plan =
      opt.strategy == Strategy::kAllSizes
          ? build_plan(n, opt.num_samples, opt.seed, threads)
          : build_plan_small_large(n, opt.num_samples, cap, opt.seed, threads);
  ex.num_samples = plan.num_samples;
  ex.timings.sample_ms = watch.lap_ms();

  // The explained class is the model's whole-graph prediction, which the
  // full-graph-normalized predictor reproduces exactly at full coalition.
  MaskedPredictor frozen(model, ex.comp, feats, NormalizationMode::kFullGraph);
  {
    const std::vector<double>& probs = frozen.full_probs();
    ex.explained_class = static_cast<int>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
  }

  std::optional<MaskedPredictor> coalition_owned;
  if (opt.norm != NormalizationMode::kFullGraph)
    coalition_owned.emplace(model, ex.comp, feats, opt.norm);
  const MaskedPredictor& predictor = coalition_owned ? *coalition_owned : frozen;
  ex.base_value = predictor.base_probs()[ex.explained_class];
  ex.full_value = predictor.full_probs()[ex.explained_class];

  MaskedPredictor::BatchResult batch = predictor.predict_class_batch(
      plan.masks, ex.explained_class, opt.batch_size, threads);
  ex.pruned_predictions = batch.pruned_count;
  ex.timings.predict_ms = watch.lap_ms();

  if (!opt.force_iterative && n <= opt.dense_solver_limit) {
    ex.phi = solve_wls(plan.masks, plan.weights, batch.values, ex.base_value,
                       ex.full_value);
  } else {
    ex.phi = solve_iterative(plan.masks, plan.weights, batch.values,
                             ex.base_value, ex.full_value);
  }
  ex.timings.solve_ms = watch.lap_ms();
  return ex;
}

}  // namespace edgeshap
