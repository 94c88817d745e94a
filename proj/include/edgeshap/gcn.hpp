#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "edgeshap/bitmatrix.hpp"
#include "edgeshap/common.hpp"
#include "edgeshap/comp_graph.hpp"
#include "edgeshap/graph.hpp"
#include "edgeshap/tensor_archive.hpp"

namespace edgeshap {

// Two-layer graph convolution for node classification:
//   softmax( A' relu( A' X W0 + b0 ) W1 + b1 )
// with A' the symmetrically normalized adjacency including self loops,
// A'[v][u] = 1 / sqrt(deg(u) deg(v)) for each message u -> v and for
// u == v, where deg(i) counts incoming edges plus the self loop.
// Parameters are stored f32; all accumulation happens in f64.
struct GcnModel {
  int in_dim = 0;
  int hidden_dim = 0;
  int num_classes = 0;
  std::vector<float> w0;  // [in_dim][hidden_dim]
  std::vector<float> b0;  // [hidden_dim]
  std::vector<float> w1;  // [hidden_dim][num_classes]
  std::vector<float> b1;  // [num_classes]

  static GcnModel from_archive(const TensorArchive& a) {
    GcnModel m;
    const Tensor& w0t = a.get("layer0.weight");
    w0t.expect_dims({-1, -1});
    m.in_dim = static_cast<int>(w0t.dims()[0]);
    m.hidden_dim = static_cast<int>(w0t.dims()[1]);
    const Tensor& w1t = a.get("layer1.weight");
    w1t.expect_dims({m.hidden_dim, -1});
    m.num_classes = static_cast<int>(w1t.dims()[1]);
    a.get("layer0.bias").expect_dims({m.hidden_dim});
    a.get("layer1.bias").expect_dims({m.num_classes});

    auto copy = [&a](const std::string& name, std::vector<float>& dst) {
      auto s = a.get(name).as_f32();
      dst.assign(s.begin(), s.end());
    };
    copy("layer0.weight", m.w0);
    copy("layer0.bias", m.b0);
    copy("layer1.weight", m.w1);
    copy("layer1.bias", m.b1);
    return m;
  }

  TensorArchive to_archive() const {
    TensorArchive a;
    auto u64 = [](int v) { return static_cast<std::uint64_t>(v); };
    a.add(Tensor::f32("layer0.weight", {u64(in_dim), u64(hidden_dim)}, w0));
    a.add(Tensor::f32("layer0.bias", {u64(hidden_dim)}, b0));
    a.add(Tensor::f32("layer1.weight", {u64(hidden_dim), u64(num_classes)}, w1));
    a.add(Tensor::f32("layer1.bias", {u64(num_classes)}, b1));
    return a;
  }
};

inline GcnModel load_model(const std::string& path) {
  return GcnModel::from_archive(load_tensor_archive(path));
}

inline void save_model(const GcnModel& m, const std::string& path) {
  save_tensor_archive(m.to_archive(), path);
}

namespace detail {

inline void softmax_inplace(std::span<double> z) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

}  // namespace detail

// Reference forward pass over an explicit node/edge set. `feats` is a
// row-major [num_nodes][in_dim] block in local node order. `degrees`
// optionally overrides the normalization degrees (one per local node);
// when empty, degrees are recomputed as 1 + in-degree within `edges`.
// Returns softmax probabilities for every node, row-major [num_nodes][C].
inline std::vector<double> gcn_forward(const GcnModel& m, NodeId num_nodes,
                                       std::span<const Edge> edges,
                                       const float* feats,
                                       std::span<const double> degrees = {}) {
  const int d = m.in_dim, h = m.hidden_dim, c = m.num_classes;
  const std::size_t n = static_cast<std::size_t>(num_nodes);

  std::vector<double> inv_sqrt(n);
  if (degrees.empty()) {
    std::vector<std::int64_t> deg(n, 1);
    for (const Edge& e : edges) ++deg[e.dst];
    for (std::size_t i = 0; i < n; ++i)
      inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(deg[i]));
  } else {
    require(degrees.size() == n, "gcn_forward: degree override size mismatch");
    for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degrees[i]);
  }

  // Z0 = X W0, bias deferred to after aggregation.
  std::vector<float> z0(n * h);
  for (std::size_t v = 0; v < n; ++v) {
    const float* x = feats + v * d;
    for (int j = 0; j < h; ++j) {
      double acc = 0.0;
      for (int i = 0; i < d; ++i) acc += static_cast<double>(x[i]) * m.w0[i * h + j];
      z0[v * h + j] = static_cast<float>(acc);
    }
  }

  // H1 = relu(A' Z0 + b0), aggregated in f64.
  std::vector<double> agg(n * h, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    double self = inv_sqrt[v] * inv_sqrt[v];
    for (int j = 0; j < h; ++j)
      agg[v * h + j] = self * static_cast<double>(z0[v * h + j]);
  }
  for (const Edge& e : edges) {
    double w = inv_sqrt[e.src] * inv_sqrt[e.dst];
    const float* src = z0.data() + static_cast<std::size_t>(e.src) * h;
    double* dst = agg.data() + static_cast<std::size_t>(e.dst) * h;
    for (int j = 0; j < h; ++j) dst[j] += w * static_cast<double>(src[j]);
  }
  std::vector<float> h1(n * h);
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < h; ++j)
      h1[i * h + j] = static_cast<float>(
          std::max(0.0, agg[i * h + j] + static_cast<double>(m.b0[j])));

  // G = H1 W1, then logits = A' G + b1.
  std::vector<float> g(n * c);
  for (std::size_t v = 0; v < n; ++v) {
    for (int k = 0; k < c; ++k) {
      double acc = 0.0;
      for (int j = 0; j < h; ++j)
        acc += static_cast<double>(h1[v * h + j]) * m.w1[j * c + k];
      g[v * c + k] = static_cast<float>(acc);
    }
  }
  std::vector<double> out(n * c, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    double self = inv_sqrt[v] * inv_sqrt[v];
    for (int k = 0; k < c; ++k)
      out[v * c + k] = self * static_cast<double>(g[v * c + k]);
  }
  for (const Edge& e : edges) {
    double w = inv_sqrt[e.src] * inv_sqrt[e.dst];
    const float* src = g.data() + static_cast<std::size_t>(e.src) * c;
    double* dst = out.data() + static_cast<std::size_t>(e.dst) * c;
    for (int k = 0; k < c; ++k) dst[k] += w * static_cast<double>(src[k]);
  }
  for (std::size_t v = 0; v < n; ++v) {
    double* row = out.data() + v * c;
    for (int k = 0; k < c; ++k) row[k] += static_cast<double>(m.b1[k]);
    detail::softmax_inplace({row, static_cast<std::size_t>(c)});
  }
  return out;
}

// How coalition degrees are normalized. kCoalition recomputes degrees from
// the surviving edges of each coalition, so dropping an edge also changes
// the scale of its neighbors' remaining messages. kFullGraph freezes the
// whole-input-graph degrees at extraction time; with all players present
// the prediction then matches the unpruned model output exactly.
enum class NormalizationMode { kCoalition, kFullGraph };

inline const char* to_string(NormalizationMode m) {
  return m == NormalizationMode::kCoalition ? "coalition" : "full";
}

// True when no 1-hop player survives in the row: the target then receives
// only its self loop, the coalition's prediction collapses to the empty
// coalition's, and the forward pass can be skipped.
inline bool should_prune_prediction(const CompGraph& comp,
                                    const BitMatrix& masks, std::int64_t row) {
  return !masks.any_in_prefix(row, comp.one_hop_count);
}

// Evaluates the model on coalition-masked variants of one computational
// graph. Work shared across samples is done once here: feature rows are
// gathered, the input transform X W0 is precomputed per node, and players
// are bucketed by destination. A per-sample evaluation then touches only
// the target's surviving 1-hop sources.
class MaskedPredictor {
 public:
  MaskedPredictor(const GcnModel& model, const CompGraph& comp,
                  const FeatureMatrix& feats, NormalizationMode mode)
      : model_(model), comp_(comp), mode_(mode) {
    const int n = comp.num_local_nodes();
    const int d = model.in_dim, h = model.hidden_dim;
    require(feats.dim() == d, "MaskedPredictor: feature dim " +
                                  std::to_string(feats.dim()) +
                                  " != model input dim " + std::to_string(d));

    // X W0 for every local node, bias excluded so masking stays linear.
    z0_.resize(static_cast<std::size_t>(n) * h);
    for (int v = 0; v < n; ++v) {
      const float* x = feats.row(comp.local_to_global[v]);
      for (int j = 0; j < h; ++j) {
        double acc = 0.0;
        for (int i = 0; i < d; ++i)
          acc += static_cast<double>(x[i]) * model.w0[i * h + j];
        z0_[static_cast<std::size_t>(v) * h + j] = static_cast<float>(acc);
      }
    }

    // Players bucketed by destination for the per-sample walks. Player
    // order within a bucket follows the global (dst, src) sort.
    by_dst_off_.assign(n + 1, 0);
    for (const Edge& p : comp.players) ++by_dst_off_[p.dst + 1];
    for (int v = 0; v < n; ++v) by_dst_off_[v + 1] += by_dst_off_[v];
    by_dst_player_.resize(comp.players.size());
    by_dst_src_.resize(comp.players.size());
    {
      std::vector<std::int64_t> cursor(by_dst_off_.begin(), by_dst_off_.end() - 1);
      for (std::size_t i = 0; i < comp.players.size(); ++i) {
        const Edge& p = comp.players[i];
        std::int64_t slot = cursor[p.dst]++;
        by_dst_player_[slot] = static_cast<std::int64_t>(i);
        by_dst_src_[slot] = p.src;
      }
    }

    if (mode == NormalizationMode::kFullGraph) {
      frozen_inv_sqrt_.resize(n);
      for (int v = 0; v < n; ++v)
        frozen_inv_sqrt_[v] = 1.0 / std::sqrt(comp.frozen_degrees[v]);
    } else {
      // Coalition degrees are integers in [1, 1 + max in-players], so the
      // inverse square roots come from a lookup table.
      std::int64_t max_deg = 1;
      for (int v = 0; v < n; ++v)
        max_deg = std::max(max_deg, 1 + (by_dst_off_[v + 1] - by_dst_off_[v]));
      inv_sqrt_table_.resize(static_cast<std::size_t>(max_deg) + 1, 0.0);
      for (std::int64_t k = 1; k <= max_deg; ++k)
        inv_sqrt_table_[k] = 1.0 / std::sqrt(static_cast<double>(k));
    }

    const std::size_t words =
        static_cast<std::size_t>((comp.num_players() + 63) / 64);
    std::vector<std::uint64_t> empty(std::max<std::size_t>(words, 1), 0);
    base_probs_ = predict_probs(empty.data());
    std::vector<std::uint64_t> full(std::max<std::size_t>(words, 1),
                                    ~std::uint64_t{0});
    if (comp.num_players() & 63)
      full[words - 1] = (1ull << (comp.num_players() & 63)) - 1;
    full_probs_ = predict_probs(full.data());
  }

  NormalizationMode mode() const { return mode_; }
  const std::vector<double>& base_probs() const { return base_probs_; }
  const std::vector<double>& full_probs() const { return full_probs_; }

  // Softmax probabilities at the target for one coalition. `words` is the
  // packed player mask (bit i == player i survives).
  std::vector<double> predict_probs(const std::uint64_t* words) const {
    Scratch s;
    return predict_probs(words, s);
  }

  struct Scratch {
    std::vector<std::int64_t> deg;
    std::vector<double> h1;
    std::vector<double> z;
  };

  std::vector<double> predict_probs(const std::uint64_t* words, Scratch& s) const {
    const int h = model_.hidden_dim, c = model_.num_classes;
    const int n = comp_.num_local_nodes();

    const double* inv = nullptr;
    if (mode_ == NormalizationMode::kFullGraph) {
      inv = frozen_inv_sqrt_.data();
    } else {
      s.deg.assign(n, 1);
      for (int i = 0; i < comp_.num_players(); ++i)
        if ((words[i >> 6] >> (i & 63)) & 1u) ++s.deg[comp_.players[i].dst];
      // Degrees become inverse square roots lazily through the table.
    }
    auto inv_sqrt = [&](int v) -> double {
      return inv ? inv[v] : inv_sqrt_table_[s.deg[v]];
    };

    s.z.assign(c, 0.0);
    const double inv_t = inv_sqrt(0);

    // Hidden activation of one node from its surviving in-players, then
    // its contribution through W1 straight into the target's logits.
    auto accumulate_node = [&](int v, double edge_weight) {
      s.h1.assign(h, 0.0);
      const double self = inv_sqrt(v) * inv_sqrt(v);
      const float* z0v = z0_.data() + static_cast<std::size_t>(v) * h;
      for (int j = 0; j < h; ++j) s.h1[j] = self * static_cast<double>(z0v[j]);
      for (std::int64_t k = by_dst_off_[v]; k < by_dst_off_[v + 1]; ++k) {
        std::int64_t p = by_dst_player_[k];
        if (!((words[p >> 6] >> (p & 63)) & 1u)) continue;
        const int u = by_dst_src_[k];
        const double w = inv_sqrt(u) * inv_sqrt(v);
        const float* z0u = z0_.data() + static_cast<std::size_t>(u) * h;
        for (int j = 0; j < h; ++j) s.h1[j] += w * static_cast<double>(z0u[j]);
      }
      for (int j = 0; j < h; ++j) {
        double act = s.h1[j] + static_cast<double>(model_.b0[j]);
        if (act <= 0.0) continue;
        const float* w1j = model_.w1.data() + static_cast<std::size_t>(j) * c;
        for (int k = 0; k < c; ++k)
          s.z[k] += edge_weight * act * static_cast<double>(w1j[k]);
      }
    };

    accumulate_node(0, inv_t * inv_t);
    for (std::int64_t k = by_dst_off_[0]; k < by_dst_off_[1]; ++k) {
      std::int64_t p = by_dst_player_[k];
      if (!((words[p >> 6] >> (p & 63)) & 1u)) continue;
      const int u = by_dst_src_[k];
      accumulate_node(u, inv_sqrt(u) * inv_t);
    }

    for (int k = 0; k < c; ++k) s.z[k] += static_cast<double>(model_.b1[k]);
    std::vector<double> probs(s.z.begin(), s.z.end());
    detail::softmax_inplace(probs);
    return probs;
  }

  // Probability of `cls` for every mask row. Rows whose 1-hop prefix is
  // empty are assigned the base value without a forward pass; the count of
  // such rows is returned alongside. Rows are processed in blocks of
  // batch_size within each worker's contiguous chunk, so results do not
  // depend on batch_size or thread count.
  struct BatchResult {
    std::vector<double> values;
    std::int64_t pruned_count = 0;
  };

  BatchResult predict_class_batch(const BitMatrix& masks, int cls,
                                  std::int64_t batch_size, int threads) const {
    require(masks.cols() == comp_.num_players(),
            "predict_class_batch: mask width != player count");
    require(cls >= 0 && cls < model_.num_classes,
            "predict_class_batch: class out of range");
    if (batch_size < 1) batch_size = 1;

    BatchResult result;
    result.values.assign(masks.rows(), 0.0);
    std::atomic<std::int64_t> pruned{0};
    const double base = base_probs_[cls];

    parallel_chunks(masks.rows(), threads,
                    [&](int, std::int64_t begin, std::int64_t end) {
                      Scratch scratch;
                      std::int64_t local_pruned = 0;
                      for (std::int64_t b = begin; b < end; b += batch_size) {
                        std::int64_t stop = std::min(end, b + batch_size);
                        for (std::int64_t r = b; r < stop; ++r) {
                          if (should_prune_prediction(comp_, masks, r)) {
                            result.values[r] = base;
                            ++local_pruned;
                            continue;
                          }
                          result.values[r] =
                              predict_probs(masks.row(r), scratch)[cls];
                        }
                      }
                      pruned += local_pruned;
                    });
    result.pruned_count = pruned.load();
    return result;
  }

 private:
  const GcnModel& model_;
  const CompGraph& comp_;
  NormalizationMode mode_;
  std::vector<float> z0_;
  std::vector<std::int64_t> by_dst_off_;
  std::vector<std::int64_t> by_dst_player_;
  std::vector<int> by_dst_src_;
  std::vector<double> frozen_inv_sqrt_;
  std::vector<double> inv_sqrt_table_;
  std::vector<double> base_probs_;
  std::vector<double> full_probs_;
};

// Free-function form used by the pipeline: probability of `cls` under
// every coalition in `masks`.
inline MaskedPredictor::BatchResult batched_masked_predict(
    const GcnModel& model, const CompGraph& comp, const FeatureMatrix& feats,
    const BitMatrix& masks, int cls, NormalizationMode mode,
    std::int64_t batch_size, int threads) {
  MaskedPredictor predictor(model, comp, feats, mode);
  return predictor.predict_class_batch(masks, cls, batch_size, threads);
}

// Naive per-sample baseline: one full forward pass per coalition, feature
// gather and input transform redone every time, nothing shared and nothing
// skipped. Exists as the comparison point for the batched path, in both
// correctness (values agree) and speed (batched should win by a wide
// margin).
inline std::vector<double> unbatched_masked_predict(const GcnModel& model,
                                                    const CompGraph& comp,
                                                    const FeatureMatrix& feats,
                                                    const BitMatrix& masks,
                                                    int cls,
                                                    NormalizationMode mode) {
  const int n_local = comp.num_local_nodes();
  std::vector<double> values(masks.rows());
  std::vector<Edge> surviving;
  for (std::int64_t r = 0; r < masks.rows(); ++r) {
    std::vector<float> local_feats(
        static_cast<std::size_t>(n_local) * model.in_dim);
    for (int v = 0; v < n_local; ++v)
      std::copy_n(feats.row(comp.local_to_global[v]), model.in_dim,
                  local_feats.data() + static_cast<std::size_t>(v) * model.in_dim);
    surviving.clear();
    for (int i = 0; i < comp.num_players(); ++i)
      if (masks.get(r, i)) surviving.push_back(comp.players[i]);
    std::span<const double> degrees =
        mode == NormalizationMode::kFullGraph
            ? std::span<const double>(comp.frozen_degrees)
            : std::span<const double>();
    std::vector<double> probs = gcn_forward(model, n_local, surviving,
                                            local_feats.data(), degrees);
    values[r] = probs[cls];
  }
  return values;
}

}  // namespace edgeshap
