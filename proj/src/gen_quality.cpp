#include "genias/gen_quality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "genias/data.hpp"

namespace genias {

namespace {

constexpr int kConv0 = 16;
constexpr int kConv1 = 32;

struct EmbedTape {
  Tensor3 x, pre0, act0, pre1, act1, pooled, out;
};

EmbedTape embed_forward(const EmbeddingModel& m, const Tensor3& x) {
  EmbedTape t;
  t.x = x;
  t.pre0 = m.conv0.forward(x);
  t.act0 = nn::relu(t.pre0);
  t.pre1 = m.conv1.forward(t.act0);
  t.act1 = nn::relu(t.pre1);
  t.pooled = Tensor3(x.n, kConv1, 1);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < kConv1; ++c) {
      double s = 0.0;
      for (int s_ = 0; s_ < t.act1.t; ++s_) s += t.act1(n, c, s_);
      t.pooled(n, c, 0) = s / t.act1.t;
    }
  t.out = m.head.forward(t.pooled);
  return t;
}

double sq_dist(const Embedding& a, const Embedding& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

std::vector<Embedding> EmbeddingModel::embed(std::span<const Window> windows) const {
  std::vector<Embedding> out;
  if (windows.empty()) return out;
  for (const auto& w : windows)
    if (static_cast<int>(w.dims) != dims) throw ShapeError("embed: dimension mismatch");
  auto tape = embed_forward(*this, to_batch(windows));
  out.reserve(windows.size());
  for (int n = 0; n < tape.out.n; ++n) out.emplace_back(tape.out.sample(n).begin(), tape.out.sample(n).end());
  return out;
}

double mean_center_distance(const EmbeddingModel& model, std::span<const Window> windows) {
  auto e = model.embed(windows);
  double s = 0.0;
  for (const auto& v : e) s += sq_dist(v, model.center);
  return e.empty() ? 0.0 : s / static_cast<double>(e.size());
}

EmbeddingModel train_embedder(std::span<const Window> windows, std::uint64_t seed,
                              const EmbedderOptions& options) {
  if (windows.size() < 32) throw ParameterError("train_embedder: need at least 32 windows");
  EmbeddingModel m;
  m.dims = static_cast<int>(windows.front().dims);
  m.seed = seed;
  m.epochs = options.epochs;
  m.conv0 = nn::Conv1d("embed.conv0", ConvGeom::causal(m.dims, kConv0, 3, 1));
  m.conv1 = nn::Conv1d("embed.conv1", ConvGeom::causal(kConv0, kConv1, 3, 2));
  m.head = nn::Linear("embed.head", kConv1, kEmbeddingDim, false);
  Rng rng(seed);
  m.conv0.init(rng);
  m.conv1.init(rng);
  m.head.init(rng);
  // Bias-free so the trivial constant map is not reachable.
  m.conv0.bias.zero_grad();
  std::fill(m.conv0.bias.value.begin(), m.conv0.bias.value.end(), 0.0);
  std::fill(m.conv1.bias.value.begin(), m.conv1.bias.value.end(), 0.0);

  // Center: mean initial embedding, with near-zero coordinates pushed away from 0.
  const auto initial = m.embed(windows);
  m.center.assign(kEmbeddingDim, 0.0);
  for (const auto& e : initial)
    for (int i = 0; i < kEmbeddingDim; ++i) m.center[i] += e[i];
  for (auto& c : m.center) {
    c /= static_cast<double>(initial.size());
    if (std::abs(c) < 0.1) c = c < 0.0 ? -0.1 : 0.1;
  }
  m.initial_distance = mean_center_distance(m, windows);

  std::vector<nn::Parameter*> params{&m.conv0.weight, &m.conv1.weight, &m.head.weight};
  nn::Adam adam(params, {options.learning_rate});
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(std::max(1, options.batch_size));
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < order.size(); s += batch) {
      const std::size_t e = std::min(order.size(), s + batch);
      std::vector<Window> xs;
      for (std::size_t k = s; k < e; ++k) xs.push_back(windows[order[k]]);
      auto tape = embed_forward(m, to_batch(xs));
      const int B = tape.out.n;
      Tensor3 g_out(B, kEmbeddingDim, 1);
      for (int n = 0; n < B; ++n)
        for (int i = 0; i < kEmbeddingDim; ++i)
          g_out(n, i, 0) = 2.0 * (tape.out(n, i, 0) - m.center[i]) / B;
      for (auto* p : params) p->zero_grad();
      m.conv0.bias.zero_grad();
      m.conv1.bias.zero_grad();
      Tensor3 g_pool = m.head.backward(tape.pooled, g_out);
      Tensor3 g_act1(B, kConv1, tape.act1.t);
      for (int n = 0; n < B; ++n)
        for (int c = 0; c < kConv1; ++c)
          for (int s_ = 0; s_ < g_act1.t; ++s_) g_act1(n, c, s_) = g_pool(n, c, 0) / g_act1.t;
      Tensor3 g_act0 = m.conv1.backward(tape.act0, nn::relu_backward(tape.pre1, g_act1));
      Tensor3 g_pre0 = nn::relu_backward(tape.pre0, g_act0);
      kernels::conv1d_backward(tape.x, m.conv0.weight.value, g_pre0, m.conv0.geom, nullptr,
                               m.conv0.weight.grad, m.conv0.bias.grad);
      adam.step(params);
    }
  }
  m.final_distance = mean_center_distance(m, windows);

  const auto final_emb = m.embed(windows);
  double var = 0.0;
  for (int i = 0; i < kEmbeddingDim; ++i) {
    double mean = 0.0;
    for (const auto& e : final_emb) mean += e[i];
    mean /= static_cast<double>(final_emb.size());
    for (const auto& e : final_emb) var += (e[i] - mean) * (e[i] - mean);
  }
  var /= static_cast<double>(final_emb.size() * kEmbeddingDim);
  m.collapsed = var < 1e-8;
  return m;
}

double arp(std::span<const Embedding> real, std::span<const Embedding> generated) {
  if (real.empty() || generated.empty()) throw MetricError("arp: empty embedding set");
  double total = 0.0;
  for (const auto& r : real) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : generated) {
      if (g.size() != r.size()) throw MetricError("arp: embedding size mismatch");
      best = std::min(best, sq_dist(r, g));
    }
    total += std::sqrt(best);
  }
  return 1.0 / (1.0 + total / static_cast<double>(real.size()));
}

std::size_t Partition::assign(const Embedding& v) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centroids.size(); ++k) {
    const double d = sq_dist(v, centroids[k]);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

Partition build_partition(std::span<const Embedding> all, std::size_t k, std::uint64_t seed,
                          int max_iterations) {
  if (k < 2) throw ParameterError("build_partition: K must be at least 2");
  if (all.size() < k) throw ParameterError("build_partition: fewer points than regions");
  Rng rng(seed);
  Partition p;

  // k-means++ seeding.
  std::vector<double> nearest(all.size(), std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> taken(all.size(), 0);
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(rng);
  p.centroids.push_back(all[first]);
  taken[first] = 1;
  while (p.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < all.size(); ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(all[i], p.centroids.back()));
      if (!taken[i]) total += nearest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      pick = all.size();
      for (std::size_t i = 0; i < all.size(); ++i) {
        if (taken[i]) continue;
        r -= nearest[i];
        pick = i;
        if (r <= 0.0) break;
      }
    } else {
      // Remaining points coincide with centroids; take the first unused one.
      pick = static_cast<std::size_t>(std::find(taken.begin(), taken.end(), 0) - taken.begin());
    }
    taken[pick] = 1;
    p.centroids.push_back(all[pick]);
  }

  std::vector<std::size_t> assignment(all.size(), k);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < all.size(); ++i) {
      const auto a = p.assign(all[i]);
      if (a != assignment[i]) {
        assignment[i] = a;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<Embedding> sums(k, Embedding(all.front().size(), 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < all.size(); ++i) {
      ++counts[assignment[i]];
      for (std::size_t d = 0; d < all[i].size(); ++d) sums[assignment[i]][d] += all[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty region keeps its centroid
      for (auto& v : sums[c]) v /= static_cast<double>(counts[c]);
      p.centroids[c] = std::move(sums[c]);
    }
  }
  return p;
}

std::size_t default_partition_k(std::size_t n) { return std::max<std::size_t>(2, std::min<std::size_t>(32, n / 10)); }

double shannon_entropy(std::span<const double> proportions) {
  double h = 0.0;
  for (double p : proportions)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

double edi(std::span<const Embedding> generated, const Partition& partition) {
  if (generated.empty()) throw MetricError("edi: empty embedding set");
  if (partition.size() < 2) throw MetricError("edi: partition needs at least two regions");
  std::vector<double> p(partition.size(), 0.0);
  for (const auto& v : generated) p[partition.assign(v)] += 1.0;
  for (auto& x : p) x /= static_cast<double>(generated.size());
  return shannon_entropy(p) / std::log(static_cast<double>(partition.size()));
}

}  // namespace genias
