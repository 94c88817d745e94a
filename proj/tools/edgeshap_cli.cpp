// Command-line front end: explain nodes of a GCN node-classification task,
// evaluate explanation fidelity, benchmark the sampling/prediction paths,
// export DOT renderings, and generate synthetic fixtures.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "edgeshap/edgeshap.hpp"

namespace es = edgeshap;
namespace fs = std::filesystem;

namespace {

struct CommonInputs {
  std::string graph_path;
  std::string features_path;
  std::string model_path;
  std::string nodes_spec;
  int layers = 2;
  std::int64_t samples = 10000;
  std::string strategy = "all-sizes";
  int max_coalition = 5;
  std::int64_t batch_size = 1024;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string norm = "coalition";
};

void add_common_options(CLI::App* cmd, CommonInputs& in, bool need_nodes) {
  cmd->add_option("--graph", in.graph_path, "Edge list file")->required();
  cmd->add_option("--features", in.features_path, "Feature tensor archive")
      ->required();
  cmd->add_option("--model", in.model_path, "Model weight tensor archive")
      ->required();
  auto* nodes = cmd->add_option(
      "--nodes", in.nodes_spec,
      "Target nodes: comma list (5,17,42), @file (one id per line), or "
      "first:K@file");
  if (need_nodes) nodes->required();
  cmd->add_option("--layers", in.layers, "Receptive-field depth")
      ->check(CLI::Range(1, 8))
      ->capture_default_str();
  cmd->add_option("--samples", in.samples, "Coalition sample budget (even)")
      ->capture_default_str();
  cmd->add_option("--strategy", in.strategy, "Sampling strategy")
      ->check(CLI::IsMember({"all-sizes", "small-large"}))
      ->capture_default_str();
  cmd->add_option("--max-coalition", in.max_coalition,
                  "Size cap for the small-large strategy")
      ->capture_default_str();
  cmd->add_option("--batch-size", in.batch_size, "Prediction batch size")
      ->capture_default_str();
  cmd->add_option("--seed", in.seed, "Sampling seed")->capture_default_str();
  cmd->add_option("--threads", in.threads,
                  "Worker threads (0: EDGESHAP_THREADS env, then cores)")
      ->capture_default_str();
  cmd->add_option("--norm", in.norm,
                  "Coalition normalization: recompute degrees per coalition "
                  "or freeze whole-graph degrees")
      ->check(CLI::IsMember({"coalition", "full"}))
      ->capture_default_str();
}

es::ExplainOptions to_options(const CommonInputs& in) {
  es::ExplainOptions opt;
  opt.num_layers = in.layers;
  opt.num_samples = in.samples;
  opt.strategy = in.strategy == "all-sizes" ? es::Strategy::kAllSizes
                                            : es::Strategy::kSmallLarge;
  opt.max_coalition = in.max_coalition;
  opt.batch_size = in.batch_size;
  opt.seed = in.seed;
  opt.threads = in.threads;
  opt.norm = in.norm == "coalition" ? es::NormalizationMode::kCoalition
                                    : es::NormalizationMode::kFullGraph;
  es::require(opt.num_samples >= 4 && opt.num_samples % 2 == 0,
              "--samples must be even and >= 4");
  es::require(opt.batch_size >= 1, "--batch-size must be >= 1");
  return opt;
}

std::vector<es::NodeId> read_node_file(const std::string& path,
                                       std::int64_t limit) {
  std::ifstream in(path);
  es::require(in.good(), "cannot open node file " + path);
  std::vector<es::NodeId> nodes;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    long long id;
    while (ls >> id) {
      nodes.push_back(static_cast<es::NodeId>(id));
      if (limit > 0 && static_cast<std::int64_t>(nodes.size()) >= limit)
        return nodes;
    }
  }
  return nodes;
}

// "5,17,42" | "@targets.txt" | "first:100@targets.txt"
std::vector<es::NodeId> parse_nodes_spec(const std::string& spec) {
  es::require(!spec.empty(), "--nodes must not be empty");
  if (spec[0] == '@') return read_node_file(spec.substr(1), -1);
  if (spec.rfind("first:", 0) == 0) {
    auto at = spec.find('@');
    es::require(at != std::string::npos,
                "--nodes first:K@file requires a file part");
    std::int64_t k = std::stoll(spec.substr(6, at - 6));
    es::require(k > 0, "--nodes first:K requires K > 0");
    return read_node_file(spec.substr(at + 1), k);
  }
  std::vector<es::NodeId> nodes;
  std::istringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) nodes.push_back(static_cast<es::NodeId>(std::stoll(tok)));
  es::require(!nodes.empty(), "--nodes parsed to an empty list");
  return nodes;
}

struct LoadedTask {
  es::Graph graph;
  es::FeatureMatrix feats;
  es::GcnModel model;
};

LoadedTask load_inputs(const CommonInputs& in) {
  LoadedTask t;
  t.graph = es::load_edge_list(in.graph_path, true);
  t.feats = es::load_features(in.features_path);
  t.model = es::load_model(in.model_path);
  es::require(t.feats.num_nodes() == t.graph.num_nodes(),
              "feature rows (" + std::to_string(t.feats.num_nodes()) +
                  ") != graph nodes (" + std::to_string(t.graph.num_nodes()) +
                  ")");
  return t;
}

// Predicted class of every node from one whole-graph forward pass.
std::vector<int> predict_all_classes(const LoadedTask& t) {
  std::vector<es::Edge> edges = t.graph.edges();
  std::vector<double> probs =
      es::gcn_forward(t.model, t.graph.num_nodes(), edges, t.feats.row(0));
  const int c = t.model.num_classes;
  std::vector<int> classes(t.graph.num_nodes());
  for (es::NodeId v = 0; v < t.graph.num_nodes(); ++v) {
    const double* row = probs.data() + static_cast<std::size_t>(v) * c;
    classes[v] =
        static_cast<int>(std::max_element(row, row + c) - row);
  }
  return classes;
}

struct NodeOutcome {
  es::NodeId node = 0;
  bool ok = false;
  std::string error;
  std::optional<es::Explanation> explanation;
};

// Explain many nodes. Multi-node runs parallelize across nodes with
// single-threaded inner pipelines; single-node runs let the pipeline use
// the full thread budget. All file writing stays with the caller.
std::vector<NodeOutcome> explain_many(const LoadedTask& t,
                                      const std::vector<es::NodeId>& nodes,
                                      const es::ExplainOptions& opt) {
  std::vector<NodeOutcome> out(nodes.size());
  const int budget = es::resolve_threads(opt.threads);
  const bool across_nodes = nodes.size() > 1;
  es::ExplainOptions inner = opt;
  if (across_nodes) inner.threads = 1;

  es::parallel_chunks(
      static_cast<std::int64_t>(nodes.size()), across_nodes ? budget : 1,
      [&](int, std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) {
          out[i].node = nodes[i];
          try {
            out[i].explanation =
                es::explain_node(t.graph, t.feats, t.model, nodes[i], inner);
            out[i].ok = true;
          } catch (const std::exception& e) {
            out[i].error = e.what();
          }
        }
      });
  return out;
}

int cmd_explain(const CommonInputs& in, const std::string& out_dir,
                const std::string& format) {
  LoadedTask t = load_inputs(in);
  es::ExplainOptions opt = to_options(in);
  std::vector<es::NodeId> nodes = parse_nodes_spec(in.nodes_spec);
  const std::string fingerprint = es::config_fingerprint(
      in.graph_path, in.features_path, in.model_path, opt);

  fs::create_directories(out_dir);
  std::vector<int> classes;
  if (format == "json" || format == "dot") classes = predict_all_classes(t);

  std::vector<NodeOutcome> outcomes = explain_many(t, nodes, opt);

  es::Json summary_nodes = es::Json::array();
  int failures = 0;
  for (const NodeOutcome& oc : outcomes) {
    if (!oc.ok) {
      ++failures;
      summary_nodes.push_back(
          {{"node", oc.node}, {"ok", false}, {"error", oc.error}});
      std::cerr << "node " << oc.node << ": " << oc.error << "\n";
      continue;
    }
    const es::Explanation& ex = *oc.explanation;
    const std::string stem = out_dir + "/node_" + std::to_string(oc.node);
    if (format == "csv") {
      std::vector<int> dummy(ex.comp.local_to_global.size(), 0);
      es::ExplanationFile f = es::to_file_form(ex, dummy, fingerprint);
      std::ofstream os(stem + ".csv");
      es::write_explanation_csv(f, os);
    } else {
      std::vector<int> local_classes;
      local_classes.reserve(ex.comp.local_to_global.size());
      for (es::NodeId g : ex.comp.local_to_global)
        local_classes.push_back(classes[g]);
      es::ExplanationFile f = es::to_file_form(ex, local_classes, fingerprint);
      if (format == "dot") {
        std::ofstream os(stem + ".dot");
        es::write_dot(f, 0.0, 0, os);
      } else {
        std::ofstream os(stem + ".json");
        os << es::explanation_to_json(f).dump(2) << "\n";
      }
    }
    summary_nodes.push_back(
        {{"node", oc.node},
         {"ok", true},
         {"players", ex.num_players()},
         {"explained_class", ex.explained_class},
         {"pruned_predictions", ex.pruned_predictions},
         {"timings_ms",
          {{"prune", ex.timings.prune_ms},
           {"sample", ex.timings.sample_ms},
           {"predict", ex.timings.predict_ms},
           {"solve", ex.timings.solve_ms}}}});
  }

  es::Json summary = {{"fingerprint", fingerprint},
                      {"requested", nodes.size()},
                      {"failed", failures},
                      {"format", format},
                      {"nodes", summary_nodes}};
  std::ofstream os(out_dir + "/summary.json");
  os << summary.dump(2) << "\n";
  std::cout << "explained " << (nodes.size() - failures) << "/" << nodes.size()
            << " nodes -> " << out_dir << "\n";
  return failures == 0 ? 0 : 1;
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> out;
  std::istringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(std::stod(tok));
  es::require(!out.empty(), "empty grid");
  return out;
}

double mean_of(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  return xs.empty() ? 0.0 : m / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

int cmd_evaluate(const CommonInputs& in, const std::string& sparsity_csv,
                 const std::string& topk_csv, int repeats,
                 bool compare_strategies, const std::string& explanations_dir,
                 const std::string& out_path, const std::string& format) {
  LoadedTask t = load_inputs(in);
  std::vector<es::NodeId> nodes = parse_nodes_spec(in.nodes_spec);
  std::vector<double> sparsity_grid = parse_grid(sparsity_csv);
  std::vector<double> topk_grid_d = parse_grid(topk_csv);
  std::vector<int> topk_grid;
  for (double v : topk_grid_d) topk_grid.push_back(static_cast<int>(v));
  es::require(repeats >= 1, "--repeats must be >= 1");

  std::vector<std::string> strategies = {in.strategy};
  if (compare_strategies)
    strategies = {"all-sizes", "small-large"};

  const int threads = es::resolve_threads(in.threads);

  // One explanation set per (strategy, repeat); every grid point reuses it.
  struct RunSet {
    std::string strategy;
    std::vector<std::vector<es::Explanation>> per_repeat;
  };
  std::vector<RunSet> runs;
  es::Json errors = es::Json::array();
  int failures = 0;

  for (const std::string& strat : strategies) {
    CommonInputs local = in;
    local.strategy = strat;
    RunSet set;
    set.strategy = strat;
    for (int rep = 0; rep < repeats; ++rep) {
      es::ExplainOptions opt = to_options(local);
      opt.seed = in.seed + static_cast<std::uint64_t>(rep);

      std::vector<es::Explanation> expls;
      if (!explanations_dir.empty()) {
        es::require(repeats == 1 && strategies.size() == 1,
                    "--explanations is incompatible with --repeats > 1 or "
                    "--compare-strategies");
        const std::string expect = es::config_fingerprint(
            in.graph_path, in.features_path, in.model_path, opt);
        for (es::NodeId node : nodes) {
          const std::string path =
              explanations_dir + "/node_" + std::to_string(node) + ".json";
          es::ExplanationFile f = es::load_explanation(path);
          es::require(f.fingerprint == expect,
                      path + ": fingerprint " + f.fingerprint +
                          " does not match current config " + expect);
          es::Explanation ex;
          ex.node = f.node;
          ex.explained_class = f.explained_class;
          ex.base_value = f.base_value;
          ex.full_value = f.full_value;
          ex.phi = f.phi;
          ex.players = f.players;
          ex.norm = f.norm == "full" ? es::NormalizationMode::kFullGraph
                                     : es::NormalizationMode::kCoalition;
          ex.comp = es::extract_pruned(t.graph, f.node, f.layers);
          es::require(ex.comp.num_players() ==
                          static_cast<int>(f.players.size()),
                      path + ": player count does not match this graph");
          for (int i = 0; i < ex.comp.num_players(); ++i)
            es::require(ex.comp.player_global(i) == f.players[i],
                        path + ": player list does not match this graph");
          expls.push_back(std::move(ex));
        }
      } else {
        for (NodeOutcome& oc : explain_many(t, nodes, opt)) {
          if (oc.ok) {
            expls.push_back(std::move(*oc.explanation));
          } else {
            ++failures;
            errors.push_back({{"node", oc.node},
                              {"strategy", strat},
                              {"repeat", rep},
                              {"error", oc.error}});
            std::cerr << "node " << oc.node << " (strategy " << strat
                      << ", repeat " << rep << "): " << oc.error << "\n";
          }
        }
      }
      set.per_repeat.push_back(std::move(expls));
    }
    runs.push_back(std::move(set));
  }

  es::ExplainOptions fp_opt = to_options(in);
  const std::string fingerprint = es::config_fingerprint(
      in.graph_path, in.features_path, in.model_path, fp_opt);

  es::Json results = es::Json::array();
  std::optional<es::FidelityReport> headline;  // first strategy, first point
  for (const RunSet& set : runs) {
    for (double sp : sparsity_grid) {
      for (int tk : topk_grid) {
        std::vector<double> minus, plus;
        for (const auto& expls : set.per_repeat) {
          es::FidelityReport rep =
              es::evaluate_fidelity(t.model, t.feats, expls, sp, tk, threads);
          minus.push_back(rep.fidelity_minus);
          plus.push_back(rep.fidelity_plus);
          if (!headline) headline = rep;
        }
        results.push_back({{"strategy", set.strategy},
                           {"sparsity", sp},
                           {"top_k", tk},
                           {"fidelity_minus", mean_of(minus)},
                           {"fidelity_minus_std", std_of(minus)},
                           {"fidelity_plus", mean_of(plus)},
                           {"fidelity_plus_std", std_of(plus)},
                           {"node_count", set.per_repeat.empty()
                                              ? 0
                                              : set.per_repeat[0].size()}});
      }
    }
  }

  es::Json confidence = es::Json::object();
  if (!runs.empty() && !runs[0].per_repeat.empty() &&
      !runs[0].per_repeat[0].empty()) {
    es::ConfidenceStudy study = es::confidence_improvement(
        t.model, t.feats, runs[0].per_repeat[0], threads);
    es::Json per_node = es::Json::array();
    for (const auto& e : study.per_node)
      per_node.push_back(
          {{"node", e.node}, {"before", e.before}, {"after", e.after}});
    confidence = {{"improved_fraction", study.improved_fraction},
                  {"per_node", per_node}};
  }

  es::Json report = {{"fingerprint", fingerprint},
                     {"repeats", repeats},
                     {"sparsity_grid", sparsity_grid},
                     {"top_k_grid", topk_grid},
                     {"results", results},
                     {"confidence", confidence},
                     {"errors", errors}};
  if (headline) report["per_node"] = es::fidelity_to_json(*headline)["per_node"];

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    es::require(file.good(), "cannot open " + out_path + " for writing");
    os = &file;
  }
  if (format == "csv") {
    if (results.size() == 1 && headline) {
      es::write_fidelity_csv(*headline, *os);
    } else {
      *os << "strategy,sparsity,top_k,fidelity_minus,fidelity_minus_std,"
             "fidelity_plus,fidelity_plus_std\n";
      for (const es::Json& r : results)
        *os << r["strategy"].get<std::string>() << "," << r["sparsity"] << ","
            << r["top_k"] << "," << r["fidelity_minus"] << ","
            << r["fidelity_minus_std"] << "," << r["fidelity_plus"] << ","
            << r["fidelity_plus_std"] << "\n";
    }
  } else {
    *os << report.dump(2) << "\n";
  }
  return failures == 0 ? 0 : 1;
}

int cmd_bench(const CommonInputs& in, const std::string& out_path,
              const std::string& dump_plan_prefix) {
  LoadedTask t = load_inputs(in);
  es::ExplainOptions opt = to_options(in);
  std::vector<es::NodeId> nodes = parse_nodes_spec(in.nodes_spec);
  const int threads = es::resolve_threads(in.threads);

  es::Json per_node = es::Json::array();
  double worst_equiv = 0.0;
  for (es::NodeId node : nodes) {
    es::CompGraph comp = es::extract_pruned(t.graph, node, opt.num_layers);
    if (comp.num_players() < 2) {
      per_node.push_back({{"node", node}, {"skipped", "fewer than 2 players"}});
      continue;
    }
    const int n = comp.num_players();

    const auto make_plan = [&](int workers) {
      if (opt.strategy == es::Strategy::kSmallLarge) {
        const int mc = std::min(opt.max_coalition, n / 2);
        return es::build_plan_small_large(n, opt.num_samples,
                                          std::max(1, mc), opt.seed, workers);
      }
      return es::build_plan(n, opt.num_samples, opt.seed, workers);
    };
    es::detail::StopWatch watch;
    es::SamplePlan serial = make_plan(1);
    const double serial_ms = watch.lap_ms();
    es::SamplePlan parallel = make_plan(threads);
    const double parallel_ms = watch.lap_ms();
    bool bit_identical = serial.num_samples == parallel.num_samples;
    for (std::int64_t r = 0; bit_identical && r < serial.num_samples; ++r) {
      if (serial.weights[r] != parallel.weights[r]) bit_identical = false;
      for (std::int64_t w = 0;
           bit_identical && w < serial.masks.words_per_row(); ++w)
        if (serial.masks.row(r)[w] != parallel.masks.row(r)[w])
          bit_identical = false;
    }

    if (!dump_plan_prefix.empty()) {
      std::ofstream csv(dump_plan_prefix + "_node" + std::to_string(node) +
                        ".csv");
      es::dump_plan_csv(serial, csv);
      std::ofstream bits(dump_plan_prefix + "_node" + std::to_string(node) +
                             ".bits",
                         std::ios::binary);
      es::dump_plan_bits(serial, bits);
    }

    es::MaskedPredictor predictor(t.model, comp, t.feats, opt.norm);
    const std::vector<double>& full = predictor.full_probs();
    const int cls = static_cast<int>(
        std::max_element(full.begin(), full.end()) - full.begin());

    watch.lap_ms();
    es::MaskedPredictor::BatchResult batched =
        predictor.predict_class_batch(serial.masks, cls, opt.batch_size, threads);
    const double batched_ms = watch.lap_ms();
    std::vector<double> naive = es::unbatched_masked_predict(
        t.model, comp, t.feats, serial.masks, cls, opt.norm);
    const double sequential_ms = watch.lap_ms();

    double max_diff = 0.0;
    for (std::int64_t r = 0; r < serial.num_samples; ++r)
      max_diff = std::max(max_diff, std::abs(naive[r] - batched.values[r]));
    worst_equiv = std::max(worst_equiv, max_diff);

    es::ReductionStats red = es::count_reduction(t.graph, node, opt.num_layers);
    per_node.push_back(
        {{"node", node},
         {"players", n},
         {"sampling_serial_ms", serial_ms},
         {"sampling_parallel_ms", parallel_ms},
         {"sampling_bit_identical", bit_identical},
         {"predict_batched_ms", batched_ms},
         {"predict_sequential_ms", sequential_ms},
         {"predict_speedup",
          batched_ms > 0.0 ? sequential_ms / batched_ms : 0.0},
         {"predict_max_abs_diff", max_diff},
         {"pruned_prediction_fraction",
          static_cast<double>(batched.pruned_count) /
              static_cast<double>(serial.num_samples)},
         {"comp_graph",
          {{"full_edges", red.full_edges},
           {"players", red.pruned_players},
           {"percent_reduction", red.percent_reduction}}}});
  }

  es::Json report = {{"samples", opt.num_samples},
                     {"batch_size", opt.batch_size},
                     {"threads", threads},
                     {"strategy", in.strategy},
                     {"norm", in.norm},
                     {"max_abs_diff_batched_vs_sequential", worst_equiv},
                     {"per_node", per_node}};
  if (out_path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    std::ofstream os(out_path);
    es::require(os.good(), "cannot open " + out_path + " for writing");
    os << report.dump(2) << "\n";
    std::cout << "benchmark report -> " << out_path << "\n";
  }
  return 0;
}

int cmd_export_dot(const std::string& explanation_path, double threshold,
                   int top_k, const std::string& out_path) {
  es::ExplanationFile f = es::load_explanation(explanation_path);
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    es::require(file.good(), "cannot open " + out_path + " for writing");
    os = &file;
  }
  es::write_dot(f, threshold, top_k, *os);
  return 0;
}

int cmd_gen_fixtures(const std::string& kind, const std::string& out_dir,
                     es::NodeId num_nodes, double avg_degree, int feat_dim,
                     int hidden, int classes, std::uint64_t seed) {
  es::SyntheticTask task;
  if (kind == "random") {
    task = es::gen_random_task(num_nodes, avg_degree, feat_dim, hidden,
                               classes, seed);
  } else {
    task = es::gen_planted_task(num_nodes, feat_dim, seed);
  }
  fs::create_directories(out_dir);
  es::save_task(task, out_dir);
  std::cout << "wrote " << out_dir << "/graph.txt, features.gta, model.gta, "
            << "targets.txt" << (task.planted_edges.empty() ? "" : ", planted.txt")
            << " (" << task.graph.num_nodes() << " nodes, "
            << task.graph.num_edges() << " directed edges, "
            << task.targets.size() << " targets)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Shapley-value edge attributions for two-layer GCN node classification"};
  app.require_subcommand(1);

  CommonInputs in;
  std::string out_path;
  std::string format = "json";

  auto* explain = app.add_subcommand(
      "explain", "Explain nodes: per-edge Shapley attributions");
  add_common_options(explain, in, true);
  explain->add_option("--out", out_path, "Output directory")->required();
  explain->add_option("--format", format, "Per-node output format")
      ->check(CLI::IsMember({"json", "csv", "dot"}))
      ->capture_default_str();

  std::string sparsity_csv = "0.3";
  std::string topk_csv = "10";
  int repeats = 5;
  bool compare_strategies = false;
  std::string explanations_dir;
  auto* evaluate = app.add_subcommand(
      "evaluate", "Fidelity of explanations over sparsity/top-k grids");
  add_common_options(evaluate, in, true);
  evaluate->add_option("--sparsity", sparsity_csv,
                       "Sparsity grid (comma list)")
      ->capture_default_str();
  evaluate->add_option("--top-k", topk_csv, "Top-k grid (comma list)")
      ->capture_default_str();
  auto* repeats_opt =
      evaluate->add_option("--repeats", repeats, "Seeds per strategy")
          ->capture_default_str();
  evaluate->add_flag("--compare-strategies", compare_strategies,
                     "Evaluate both sampling strategies");
  evaluate->add_option("--explanations", explanations_dir,
                       "Reuse explanation JSONs from this directory "
                       "(fingerprint-checked) instead of recomputing");
  evaluate->add_option("--out", out_path, "Report file (default stdout)");
  evaluate->add_option("--format", format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  std::string dump_plan_prefix;
  auto* bench = app.add_subcommand(
      "bench", "Timing and equivalence checks for sampling and prediction");
  add_common_options(bench, in, true);
  bench->add_option("--out", out_path, "Report file (default stdout)");
  bench->add_option("--dump-plan", dump_plan_prefix,
                    "Debug-dump sample plans with this path prefix");

  std::string explanation_path;
  double threshold = 0.0;
  int top_k = 0;
  auto* export_dot =
      app.add_subcommand("export-dot", "Render an explanation JSON as DOT");
  export_dot
      ->add_option("--explanation", explanation_path, "Explanation JSON file")
      ->required();
  export_dot->add_option("--threshold", threshold, "Minimum |phi| to draw")
      ->capture_default_str();
  export_dot->add_option("--top-k", top_k, "Draw only the top k players (0: all)")
      ->capture_default_str();
  export_dot->add_option("--out", out_path, "Output file (default stdout)");

  std::string kind = "random";
  std::string fixture_dir;
  es::NodeId num_nodes = 100;
  double avg_degree = 4.0;
  int feat_dim = 16;
  int hidden = 8;
  int classes = 3;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen-fixtures",
                                 "Generate synthetic task fixtures on disk");
  gen->add_option("--kind", kind, "Task kind")
      ->check(CLI::IsMember({"random", "planted"}))
      ->capture_default_str();
  gen->add_option("--out", fixture_dir, "Output directory")->required();
  gen->add_option("--num-nodes", num_nodes, "Node count")
      ->capture_default_str();
  gen->add_option("--avg-degree", avg_degree, "Average degree (random kind)")
      ->capture_default_str();
  gen->add_option("--feat-dim", feat_dim, "Feature dimension")
      ->capture_default_str();
  gen->add_option("--hidden", hidden, "Hidden width (random kind)")
      ->capture_default_str();
  gen->add_option("--classes", classes, "Class count (random kind)")
      ->capture_default_str();
  gen->add_option("--seed", gen_seed, "Generation seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (explain->parsed()) return cmd_explain(in, out_path, format);
    if (evaluate->parsed()) {
      // Cached explanations carry exactly one seed, so unless the user
      // asked for repeats explicitly the default drops to match.
      if (!explanations_dir.empty() && repeats_opt->count() == 0) repeats = 1;
      return cmd_evaluate(in, sparsity_csv, topk_csv, repeats,
                          compare_strategies, explanations_dir, out_path,
                          format);
    }
    if (bench->parsed()) return cmd_bench(in, out_path, dump_plan_prefix);
    if (export_dot->parsed())
      return cmd_export_dot(explanation_path, threshold, top_k, out_path);
    if (gen->parsed())
      return cmd_gen_fixtures(kind, fixture_dir, num_nodes, avg_degree,
                              feat_dim, hidden, classes, gen_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
