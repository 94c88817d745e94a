#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "edgeshap/comp_graph.hpp"
#include "edgeshap/common.hpp"
#include "edgeshap/gcn.hpp"
#include "edgeshap/graph.hpp"
#include "edgeshap/rng.hpp"
#include "edgeshap/tensor_archive.hpp"

namespace edgeshap {

// A self-contained fixture: graph, features, model, and the nodes worth
// explaining. planted_edges[i] is targets[i]'s ground-truth edge on the
// planted task; empty for random tasks.
struct SyntheticTask {
  Graph graph;
  FeatureMatrix feats;
  GcnModel model;
  std::vector<NodeId> targets;
  std::vector<Edge> planted_edges;
  std::uint64_t seed = 0;
};

namespace detail {

// Distinct RNG stream families per generation purpose, so adding draws to
// one purpose never shifts another.
constexpr std::uint64_t kStreamEdges = std::uint64_t{1} << 40;
constexpr std::uint64_t kStreamFeatures = std::uint64_t{2} << 40;
constexpr std::uint64_t kStreamWeights = std::uint64_t{3} << 40;
constexpr std::uint64_t kStreamPlanted = std::uint64_t{4} << 40;

inline void fill_normal_f32(std::vector<float>& dst, CounterRng& rng,
                            double scale = 1.0) {
  for (float& v : dst)
    v = static_cast<float>(rng.next_normal() * scale);
}

}  // namespace detail

// Uniform random undirected graph, i.i.d. standard-normal features and
// model weights. avg_degree counts undirected incidences per node, so the
// edge count is num_nodes * avg_degree / 2.
inline SyntheticTask gen_random_task(NodeId num_nodes, double avg_degree,
                                     int feat_dim, int hidden, int classes,
                                     std::uint64_t seed) {
  require(num_nodes >= 1, "gen_random_task: num_nodes must be positive");
  require(feat_dim >= 1 && hidden >= 1 && classes >= 1,
          "gen_random_task: model dims must be positive");
  require(avg_degree >= 0.0 && avg_degree < static_cast<double>(num_nodes),
          "gen_random_task: need 0 <= avg_degree < num_nodes");

  const std::int64_t max_edges =
      static_cast<std::int64_t>(num_nodes) * (num_nodes - 1) / 2;
  std::int64_t want = std::min(
      max_edges, round_half_up(static_cast<double>(num_nodes) * avg_degree / 2));

  std::vector<Edge> edges;
  std::unordered_set<std::uint64_t> seen;
  CounterRng rng(seed, detail::kStreamEdges);
  while (static_cast<std::int64_t>(edges.size()) < want) {
    NodeId a = static_cast<NodeId>(rng.next_below(num_nodes));
    NodeId b = static_cast<NodeId>(rng.next_below(num_nodes));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!seen.insert(detail::edge_key(a, b)).second) continue;
    edges.push_back({a, b});
  }

  SyntheticTask task;
  task.seed = seed;
  task.graph = Graph::from_edges(num_nodes, std::move(edges), true);

  task.feats = FeatureMatrix(num_nodes, feat_dim);
  for (NodeId v = 0; v < num_nodes; ++v) {
    CounterRng row_rng(seed, detail::kStreamFeatures + static_cast<std::uint64_t>(v));
    for (int j = 0; j < feat_dim; ++j)
      task.feats.row(v)[j] = static_cast<float>(row_rng.next_normal());
  }

  CounterRng wrng(seed, detail::kStreamWeights);
  task.model.in_dim = feat_dim;
  task.model.hidden_dim = hidden;
  task.model.num_classes = classes;
  task.model.w0.resize(static_cast<std::size_t>(feat_dim) * hidden);
  task.model.b0.resize(hidden);
  task.model.w1.resize(static_cast<std::size_t>(hidden) * classes);
  task.model.b1.resize(classes);
  detail::fill_normal_f32(task.model.w0, wrng);
  detail::fill_normal_f32(task.model.b0, wrng);
  detail::fill_normal_f32(task.model.w1, wrng);
  detail::fill_normal_f32(task.model.b1, wrng);

  task.targets.resize(num_nodes);
  for (NodeId v = 0; v < num_nodes; ++v) task.targets[v] = v;
  return task;
}

// Node-classification task where each target's class is carried by exactly
// one designated 1-hop neighbor, and the (constructed, untrained) model
// reads exactly that signal. Layout per 7-node motif around target t:
//
//      l1 - p - t - d1 - l2        p : planted source, feature channel 0
//               |    |             d1, d2 : decoy neighbors
//              d2 - (d1)           l* : second-hop leaves
//               |
//              l3
//
// The signal channel of p is +/-4, all other entries are 0.05-scale noise.
// Layer 0 projects channel 0 to (+q, -q), layer 1 maps the relu'd pair
// antisymmetrically to two classes, so the predicted class follows the
// sign of the aggregated signal and the planted edge p -> t carries
// essentially all of it. Leftover nodes (num_nodes % 7, and any beyond one
// extra per motif) are attached without creating new strong paths.
//
// Construction is verified at generation time: for every target, ablating
// the planted edge must change the predicted-class probability more than
// ablating any other single player, under both normalization modes.
inline SyntheticTask gen_planted_task(NodeId num_nodes, int feat_dim,
                                      std::uint64_t seed) {
  require(num_nodes >= 20, "gen_planted_task: need at least 20 nodes");
  require(feat_dim >= 1, "gen_planted_task: feat_dim must be positive");

  const NodeId motifs = num_nodes / 7;
  const NodeId leftovers = num_nodes - motifs * 7;

  SyntheticTask task;
  task.seed = seed;

  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(motifs) * 7 + leftovers);
  for (NodeId g = 0; g < motifs; ++g) {
    const NodeId t = 7 * g, p = t + 1, d1 = t + 2, d2 = t + 3;
    const NodeId l1 = t + 4, l2 = t + 5, l3 = t + 6;
    edges.push_back({t, p});
    edges.push_back({t, d1});
    edges.push_back({t, d2});
    edges.push_back({p, l1});
    edges.push_back({d1, l2});
    edges.push_back({d2, l3});
    edges.push_back({d1, d2});
  }
  for (NodeId j = 0; j < leftovers; ++j) {
    const NodeId x = motifs * 7 + j;
    const NodeId g = j % motifs;
    // First one per motif hangs off the decoy (adds one weak player);
    // any further ones hang off leaves, outside every player set.
    const NodeId round = j / motifs;
    const NodeId anchor = round == 0 ? 7 * g + 2 : 7 * g + 4 + (round - 1) % 3;
    edges.push_back({anchor, x});
  }
  task.graph = Graph::from_edges(num_nodes, std::move(edges), true);

  task.feats = FeatureMatrix(num_nodes, feat_dim);
  for (NodeId v = 0; v < num_nodes; ++v) {
    CounterRng row_rng(seed, detail::kStreamFeatures + static_cast<std::uint64_t>(v));
    for (int j = 0; j < feat_dim; ++j)
      task.feats.row(v)[j] = static_cast<float>(row_rng.next_normal() * 0.05);
  }
  CounterRng sign_rng(seed, detail::kStreamPlanted);
  constexpr float kSignal = 4.0f;
  for (NodeId g = 0; g < motifs; ++g) {
    const bool positive = sign_rng.next() & 1u;
    task.feats.row(7 * g + 1)[0] = positive ? kSignal : -kSignal;
    task.targets.push_back(7 * g);
    task.planted_edges.push_back({7 * g + 1, 7 * g});
  }

  // Signal-copying model: hidden unit 0 is +channel0, unit 1 is -channel0;
  // the relu pair is mapped antisymmetrically onto two classes.
  constexpr float kGain = 2.0f;
  GcnModel& m = task.model;
  m.in_dim = feat_dim;
  m.hidden_dim = 2;
  m.num_classes = 2;
  m.w0.assign(static_cast<std::size_t>(feat_dim) * 2, 0.0f);
  m.w0[0] = 1.0f;
  m.w0[1] = -1.0f;
  m.b0.assign(2, 0.0f);
  m.w1 = {kGain, -kGain, -kGain, kGain};
  m.b1.assign(2, 0.0f);

  // Ground-truth check: the planted edge must dominate single-edge
  // ablation for every target under both normalization modes.
  for (std::size_t idx = 0; idx < task.targets.size(); ++idx) {
    CompGraph comp = extract_pruned(task.graph, task.targets[idx], 2);
    int planted = -1;
    for (int i = 0; i < comp.num_players(); ++i) {
      Edge e = comp.player_global(i);
      if (e == task.planted_edges[idx]) planted = i;
    }
    require(planted >= 0, "gen_planted_task: planted edge is not a player");

    for (NormalizationMode mode :
         {NormalizationMode::kCoalition, NormalizationMode::kFullGraph}) {
      MaskedPredictor predictor(m, comp, task.feats, mode);
      const std::vector<double>& full = predictor.full_probs();
      const int cls = static_cast<int>(
          std::max_element(full.begin(), full.end()) - full.begin());

      const int n = comp.num_players();
      BitMatrix mask(1, n);
      double planted_delta = 0.0, best_other = -1.0;
      for (int drop = 0; drop < n; ++drop) {
        for (int i = 0; i < n; ++i)
          if (i != drop) mask.set(0, i);
        double delta = std::abs(full[cls] - predictor.predict_probs(mask.row(0))[cls]);
        if (drop == planted)
          planted_delta = delta;
        else
          best_other = std::max(best_other, delta);
        for (std::int64_t w = 0; w < mask.words_per_row(); ++w)
          mask.row(0)[w] = 0;
      }
      require(planted_delta > best_other,
              "gen_planted_task: ground-truth ablation check failed at node " +
                  std::to_string(task.targets[idx]));
    }
  }
  return task;
}

// Writes a task as the three on-disk artifacts the CLI consumes, plus a
// targets file (one node id per line) and, when the task has ground truth,
// a planted-edges file with "target src dst" lines.
inline void save_task(const SyntheticTask& task, const std::string& dir) {
  save_edge_list(task.graph, dir + "/graph.txt");
  save_features(task.feats, dir + "/features.gta");
  save_model(task.model, dir + "/model.gta");

  std::ofstream targets(dir + "/targets.txt");
  require(targets.good(), "save_task: cannot write targets file");
  for (NodeId t : task.targets) targets << t << "\n";

  if (!task.planted_edges.empty()) {
    std::ofstream planted(dir + "/planted.txt");
    require(planted.good(), "save_task: cannot write planted-edges file");
    for (std::size_t i = 0; i < task.targets.size(); ++i)
      planted << task.targets[i] << " " << task.planted_edges[i].src << " "
              << task.planted_edges[i].dst << "\n";
  }
}

}  // namespace edgeshap
