#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "edgeshap/explain.hpp"
#include "edgeshap/metrics.hpp"
#include "edgeshap/synth.hpp"

using edgeshap::BitMatrix;
using edgeshap::Explanation;
using edgeshap::MaskedPredictor;

namespace {

Explanation fake_explanation(std::vector<double> phi) {
  Explanation ex;
  ex.phi = std::move(phi);
  ex.players.resize(ex.phi.size());
  return ex;
}

// A small planted benchmark plus ready explanations for the fidelity tests.
struct Bench {
  edgeshap::SyntheticTask task = edgeshap::gen_planted_task(28, 5, 4);
  std::vector<Explanation> expls;

  Bench() {
    edgeshap::ExplainOptions opt;
    opt.num_samples = 512;
    opt.seed = 2;
    for (edgeshap::NodeId t : task.targets)
      expls.push_back(edgeshap::explain_node(task.graph, task.feats,
                                             task.model, t, opt));
  }
};

}  // namespace

TEST_CASE("top-k selection ranks by magnitude with index tie-break",
          "[metrics]") {
  Explanation ex = fake_explanation({0.5, -0.5, 0.3});
  REQUIRE(edgeshap::select_topk(ex, 1) == std::vector<int>{0});
  REQUIRE(edgeshap::select_topk(ex, 2) == std::vector<int>{0, 1});
  REQUIRE(edgeshap::select_topk(ex, 3) == std::vector<int>{0, 1, 2});
  REQUIRE_THROWS_AS(edgeshap::select_topk(ex, 0), edgeshap::Error);
  REQUIRE_THROWS_AS(edgeshap::select_topk(ex, 4), edgeshap::Error);
}

TEST_CASE("sparsity selection drops the smallest magnitudes", "[metrics]") {
  Explanation ex = fake_explanation({0.5, -0.5, 0.3, -0.1});
  REQUIRE(edgeshap::select_sparsity(ex, 0.0) == std::vector<int>{0, 1, 2, 3});
  // floor(0.3 * 4) = 1 dropped: the weakest player, index 3.
  REQUIRE(edgeshap::select_sparsity(ex, 0.3) == std::vector<int>{0, 1, 2});
  REQUIRE(edgeshap::select_sparsity(ex, 0.6) == std::vector<int>{0, 1});
  REQUIRE(edgeshap::select_sparsity(ex, 0.99) == std::vector<int>{0});
  REQUIRE_THROWS_AS(edgeshap::select_sparsity(ex, 1.0), edgeshap::Error);
  REQUIRE_THROWS_AS(edgeshap::select_sparsity(ex, -0.1), edgeshap::Error);
}

TEST_CASE("selections are invariant to rescaling the attributions",
          "[metrics]") {
  Explanation a = fake_explanation({0.4, -0.2, 0.1, 0.05});
  Explanation b = fake_explanation({0.4, -0.2, 0.1, 0.05});
  for (double& p : b.phi) p *= 3.5;
  for (int k = 1; k <= 4; ++k)
    REQUIRE(edgeshap::select_topk(a, k) == edgeshap::select_topk(b, k));
  for (double s : {0.0, 0.25, 0.5, 0.75})
    REQUIRE(edgeshap::select_sparsity(a, s) == edgeshap::select_sparsity(b, s));
}

TEST_CASE("keeping everything or removing nothing changes nothing",
          "[metrics]") {
  Bench bench;
  edgeshap::FidelityReport report = edgeshap::evaluate_fidelity(
      bench.task.model, bench.task.feats, bench.expls, 0.0, 0);
  REQUIRE(report.fidelity_minus == 0.0);
  REQUIRE(report.fidelity_plus == 0.0);
  for (const auto& row : report.per_node) {
    REQUIRE(row.f_gs == row.f_gc);
    REQUIRE(row.f_gc_minus_s == row.f_gc);
  }
}

TEST_CASE("removing every player reduces the node to its base value",
          "[metrics]") {
  Bench bench;
  int max_players = 0;
  for (const Explanation& ex : bench.expls)
    max_players = std::max(max_players, ex.num_players());
  // top_k far above every player count is clamped to "remove all".
  edgeshap::FidelityReport report = edgeshap::evaluate_fidelity(
      bench.task.model, bench.task.feats, bench.expls, 0.0, max_players + 10);
  for (std::size_t i = 0; i < bench.expls.size(); ++i) {
    const Explanation& ex = bench.expls[i];
    REQUIRE_THAT(report.per_node[i].f_gc_minus_s,
                 Catch::Matchers::WithinAbs(ex.base_value, 1e-12));
    // The planted motifs make the full graph substantially more confident
    // than the empty one, so removing everything must show up.
    REQUIRE(std::abs(report.per_node[i].f_gc - report.per_node[i].f_gc_minus_s) >
            0.05);
  }
}

TEST_CASE("per-node fidelity values match direct masking", "[metrics]") {
  Bench bench;
  const double sparsity = 0.3;
  const int top_k = 3;
  edgeshap::FidelityReport report = edgeshap::evaluate_fidelity(
      bench.task.model, bench.task.feats, bench.expls, sparsity, top_k);

  double minus_acc = 0.0, plus_acc = 0.0;
  for (std::size_t i = 0; i < bench.expls.size(); ++i) {
    const Explanation& ex = bench.expls[i];
    const int n = ex.num_players();
    MaskedPredictor predictor(bench.task.model, ex.comp, bench.task.feats,
                              ex.norm);

    auto prob_of = [&](const std::vector<int>& kept) {
      BitMatrix row(1, n);
      for (int j : kept) row.set(0, j);
      return predictor.predict_probs(row.row(0))[ex.explained_class];
    };

    double f_gs = prob_of(edgeshap::select_sparsity(ex, sparsity));
    std::vector<int> top = edgeshap::select_topk(ex, std::min(top_k, n));
    std::vector<int> rest;
    for (int j = 0; j < n; ++j)
      if (std::find(top.begin(), top.end(), j) == top.end()) rest.push_back(j);
    double f_rest = prob_of(rest);

    REQUIRE(report.per_node[i].f_gs == f_gs);
    REQUIRE(report.per_node[i].f_gc_minus_s == f_rest);
    REQUIRE(report.per_node[i].f_gc == ex.full_value);
    minus_acc += std::abs(ex.full_value - f_gs);
    plus_acc += std::abs(ex.full_value - f_rest);
  }
  minus_acc /= static_cast<double>(bench.expls.size());
  plus_acc /= static_cast<double>(bench.expls.size());
  REQUIRE_THAT(report.fidelity_minus,
               Catch::Matchers::WithinAbs(minus_acc, 1e-15));
  REQUIRE_THAT(report.fidelity_plus,
               Catch::Matchers::WithinAbs(plus_acc, 1e-15));
}

TEST_CASE("thread count does not change fidelity results", "[metrics]") {
  Bench bench;
  edgeshap::FidelityReport one = edgeshap::evaluate_fidelity(
      bench.task.model, bench.task.feats, bench.expls, 0.3, 2, 1);
  edgeshap::FidelityReport four = edgeshap::evaluate_fidelity(
      bench.task.model, bench.task.feats, bench.expls, 0.3, 2, 4);
  REQUIRE(one.fidelity_minus == four.fidelity_minus);
  REQUIRE(one.fidelity_plus == four.fidelity_plus);
  for (std::size_t i = 0; i < one.per_node.size(); ++i) {
    REQUIRE(one.per_node[i].f_gs == four.per_node[i].f_gs);
    REQUIRE(one.per_node[i].f_gc_minus_s == four.per_node[i].f_gc_minus_s);
  }
}

TEST_CASE("the convenience wrappers fix one knob each", "[metrics]") {
  Bench bench;
  edgeshap::FidelityReport minus = edgeshap::fidelity_minus(
      bench.task.model, bench.task.feats, bench.expls, 0.3);
  edgeshap::FidelityReport both = edgeshap::evaluate_fidelity(
      bench.task.model, bench.task.feats, bench.expls, 0.3, 0);
  REQUIRE(minus.fidelity_minus == both.fidelity_minus);
  REQUIRE(minus.fidelity_plus == 0.0);

  edgeshap::FidelityReport plus = edgeshap::fidelity_plus(
      bench.task.model, bench.task.feats, bench.expls, 2);
  REQUIRE(plus.fidelity_minus == 0.0);
  REQUIRE(plus.top_k == 2);
}

TEST_CASE("dropping negative attributions is scored per node", "[metrics]") {
  Bench bench;
  edgeshap::ConfidenceStudy study = edgeshap::confidence_improvement(
      bench.task.model, bench.task.feats, bench.expls);
  REQUIRE(study.per_node.size() == bench.expls.size());

  int improved = 0;
  for (std::size_t i = 0; i < bench.expls.size(); ++i) {
    const Explanation& ex = bench.expls[i];
    const int n = ex.num_players();
    MaskedPredictor predictor(bench.task.model, ex.comp, bench.task.feats,
                              ex.norm);
    BitMatrix row(1, n);
    for (int j = 0; j < n; ++j)
      if (ex.phi[j] >= 0.0) row.set(0, j);
    double after = predictor.predict_probs(row.row(0))[ex.explained_class];

    REQUIRE(study.per_node[i].before == ex.full_value);
    REQUIRE(study.per_node[i].after == after);
    if (after - ex.full_value >= 0.0) ++improved;
  }
  REQUIRE_THAT(study.improved_fraction,
               Catch::Matchers::WithinAbs(
                   static_cast<double>(improved) /
                       static_cast<double>(bench.expls.size()),
                   1e-15));
}
