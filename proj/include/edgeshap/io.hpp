#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgeshap/common.hpp"
#include "edgeshap/explain.hpp"
#include "edgeshap/metrics.hpp"

namespace edgeshap {

using Json = nlohmann::ordered_json;

// 64-bit FNV-1a, the project's single content-hash primitive.
inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}, h);
}

inline std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "hash_file: cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  std::vector<std::uint8_t> buf(1 << 16);
  while (in) {
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    h = fnv1a64({buf.data(), static_cast<std::size_t>(in.gcount())}, h);
  }
  return h;
}

inline std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[i] = digits[v & 15];
  return out;
}

// Identifies (input files, explanation-relevant parameters) so downstream
// evaluation can detect that an explanation file belongs to different
// inputs or settings. Batch size and thread count are deliberately
// excluded: they do not change results.
inline std::string config_fingerprint(const std::string& graph_path,
                                      const std::string& features_path,
                                      const std::string& model_path,
                                      const ExplainOptions& opt) {
  std::string config =
      to_hex(hash_file(graph_path)) + "|" + to_hex(hash_file(features_path)) +
      "|" + to_hex(hash_file(model_path)) + "|l=" +
      std::to_string(opt.num_layers) + "|k=" + std::to_string(opt.num_samples) +
      "|strategy=" + to_string(opt.strategy) +
      "|mc=" + std::to_string(opt.max_coalition) +
      "|seed=" + std::to_string(opt.seed) + "|norm=" + to_string(opt.norm);
  return to_hex(fnv1a64(config));
}

// An explanation as serialized: global-id players, attributions, and the
// local nodes with their predicted classes (used for rendering).
struct ExplanationFile {
  NodeId node = 0;
  int explained_class = 0;
  double base_value = 0.0;
  double full_value = 0.0;
  std::vector<Edge> players;
  std::vector<double> phi;
  std::vector<NodeId> node_ids;
  std::vector<int> node_classes;

  std::int64_t samples = 0;
  std::string strategy;
  std::uint64_t seed = 0;
  int layers = 2;
  std::string norm;
  std::int64_t pruned_predictions = 0;
  std::string fingerprint;
  Explanation::Timings timings;
};

inline ExplanationFile to_file_form(const Explanation& ex,
                                    std::span<const int> local_node_classes,
                                    const std::string& fingerprint) {
  require(local_node_classes.size() == ex.comp.local_to_global.size(),
          "to_file_form: class count != local node count");
  ExplanationFile f;
  f.node = ex.node;
  f.explained_class = ex.explained_class;
  f.base_value = ex.base_value;
  f.full_value = ex.full_value;
  f.players = ex.players;
  f.phi = ex.phi;
  f.node_ids = ex.comp.local_to_global;
  f.node_classes.assign(local_node_classes.begin(), local_node_classes.end());
  f.samples = ex.num_samples;
  f.strategy = to_string(ex.strategy);
  f.seed = ex.seed;
  f.layers = ex.comp.num_layers;
  f.norm = to_string(ex.norm);
  f.pruned_predictions = ex.pruned_predictions;
  f.fingerprint = fingerprint;
  f.timings = ex.timings;
  return f;
}

inline Json explanation_to_json(const ExplanationFile& f) {
  Json players = Json::array();
  for (std::size_t i = 0; i < f.players.size(); ++i)
    players.push_back({{"src", f.players[i].src},
                       {"dst", f.players[i].dst},
                       {"phi", f.phi[i]}});
  Json nodes = Json::array();
  for (std::size_t i = 0; i < f.node_ids.size(); ++i)
    nodes.push_back({{"id", f.node_ids[i]}, {"class", f.node_classes[i]}});
  return Json{
      {"node", f.node},
      {"explained_class", f.explained_class},
      {"base_value", f.base_value},
      {"full_value", f.full_value},
      {"players", players},
      {"nodes", nodes},
      {"meta",
       {{"samples", f.samples},
        {"strategy", f.strategy},
        {"seed", f.seed},
        {"layers", f.layers},
        {"norm", f.norm},
        {"pruned_predictions", f.pruned_predictions},
        {"fingerprint", f.fingerprint},
        {"timings_ms",
         {{"prune", f.timings.prune_ms},
          {"sample", f.timings.sample_ms},
          {"predict", f.timings.predict_ms},
          {"solve", f.timings.solve_ms}}}}}};
}

inline ExplanationFile explanation_from_json(const Json& j) {
  ExplanationFile f;
  try {
    f.node = j.at("node").get<NodeId>();
    f.explained_class = j.at("explained_class").get<int>();
    f.base_value = j.at("base_value").get<double>();
    f.full_value = j.at("full_value").get<double>();
    for (const Json& p : j.at("players")) {
      f.players.push_back(
          {p.at("src").get<NodeId>(), p.at("dst").get<NodeId>()});
      f.phi.push_back(p.at("phi").get<double>());
    }
    for (const Json& nd : j.at("nodes")) {
      f.node_ids.push_back(nd.at("id").get<NodeId>());
      f.node_classes.push_back(nd.at("class").get<int>());
    }
    const Json& meta = j.at("meta");
    f.samples = meta.at("samples").get<std::int64_t>();
    f.strategy = meta.at("strategy").get<std::string>();
    f.seed = meta.at("seed").get<std::uint64_t>();
    f.layers = meta.at("layers").get<int>();
    f.norm = meta.at("norm").get<std::string>();
    f.pruned_predictions = meta.at("pruned_predictions").get<std::int64_t>();
    f.fingerprint = meta.at("fingerprint").get<std::string>();
    const Json& t = meta.at("timings_ms");
    f.timings.prune_ms = t.at("prune").get<double>();
    f.timings.sample_ms = t.at("sample").get<double>();
    f.timings.predict_ms = t.at("predict").get<double>();
    f.timings.solve_ms = t.at("solve").get<double>();
  } catch (const Json::exception& e) {
    fail(std::string("explanation JSON malformed: ") + e.what());
  }
  return f;
}

inline ExplanationFile load_explanation(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "load_explanation: cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    fail(path + ": invalid JSON: " + e.what());
  }
  return explanation_from_json(j);
}

inline void write_explanation_csv(const ExplanationFile& f, std::ostream& out) {
  out << "node,explained_class,src,dst,phi\n";
  for (std::size_t i = 0; i < f.players.size(); ++i)
    out << f.node << "," << f.explained_class << "," << f.players[i].src << ","
        << f.players[i].dst << "," << f.phi[i] << "\n";
}

inline Json fidelity_to_json(const FidelityReport& r) {
  Json per_node = Json::array();
  for (const auto& row : r.per_node)
    per_node.push_back({{"node", row.node},
                        {"f_gc", row.f_gc},
                        {"f_gs", row.f_gs},
                        {"f_gc_minus_s", row.f_gc_minus_s},
                        {"n_players", row.n_players}});
  return Json{{"node_count", r.node_count},
              {"fidelity_minus", r.fidelity_minus},
              {"fidelity_plus", r.fidelity_plus},
              {"sparsity", r.sparsity},
              {"top_k", r.top_k},
              {"per_node", per_node}};
}

inline void write_fidelity_csv(const FidelityReport& r, std::ostream& out) {
  out << "node,f_gc,f_gs,f_gc_minus_s,n_players\n";
  for (const auto& row : r.per_node)
    out << row.node << "," << row.f_gc << "," << row.f_gs << ","
        << row.f_gc_minus_s << "," << row.n_players << "\n";
}

// Fixed 12-color categorical palette for class fills.
inline const char* class_color(int cls) {
  static const char* kPalette[12] = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
      "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78"};
  return kPalette[((cls % 12) + 12) % 12];
}

// DOT rendering of an explanation. Players with |phi| below `threshold`
// are dropped; if top_k > 0 only the top_k players by |phi| survive. Edge
// width scales |phi| into [0.5, 4.0]; positive attributions are red,
// negative blue, exact zeros gray. Nodes are filled by class; the
// explained node is double-circled. Only nodes incident to a surviving
// edge (plus the target) are drawn.
inline void write_dot(const ExplanationFile& f, double threshold, int top_k,
                      std::ostream& out) {
  require(!f.players.empty(), "write_dot: explanation has no players");

  std::vector<int> keep;
  for (std::size_t i = 0; i < f.players.size(); ++i)
    if (std::abs(f.phi[i]) >= threshold) keep.push_back(static_cast<int>(i));
  if (top_k > 0 && static_cast<int>(keep.size()) > top_k) {
    std::stable_sort(keep.begin(), keep.end(), [&f](int a, int b) {
      return std::abs(f.phi[a]) > std::abs(f.phi[b]);
    });
    keep.resize(top_k);
    std::sort(keep.begin(), keep.end());
  }

  double max_abs = 0.0;
  for (int i : keep) max_abs = std::max(max_abs, std::abs(f.phi[i]));

  std::vector<char> node_used(f.node_ids.size(), 0);
  auto local_index = [&f](NodeId id) {
    for (std::size_t i = 0; i < f.node_ids.size(); ++i)
      if (f.node_ids[i] == id) return static_cast<int>(i);
    return -1;
  };
  for (int i : keep) {
    int a = local_index(f.players[i].src);
    int b = local_index(f.players[i].dst);
    if (a >= 0) node_used[a] = 1;
    if (b >= 0) node_used[b] = 1;
  }
  int target_local = local_index(f.node);
  if (target_local >= 0) node_used[target_local] = 1;

  out << "digraph explanation {\n";
  out << "  rankdir=LR;\n";
  out << "  node [style=filled, shape=circle, fontcolor=white];\n";
  for (std::size_t i = 0; i < f.node_ids.size(); ++i) {
    if (!node_used[i]) continue;
    out << "  n" << f.node_ids[i] << " [label=\"" << f.node_ids[i]
        << "\", fillcolor=\"" << class_color(f.node_classes[i]) << "\"";
    if (static_cast<int>(i) == target_local) out << ", shape=doublecircle";
    out << "];\n";
  }
  out.precision(6);
  for (int i : keep) {
    const double phi = f.phi[i];
    const double width =
        max_abs > 0.0 ? 0.5 + 3.5 * std::abs(phi) / max_abs : 0.5;
    const char* color = phi > 0.0 ? "red" : (phi < 0.0 ? "blue" : "gray");
    out << "  n" << f.players[i].src << " -> n" << f.players[i].dst
        << " [penwidth=" << width << ", color=" << color << ", label=\"" << phi
        << "\"];\n";
  }
  out << "}\n";
}

}  // namespace edgeshap
