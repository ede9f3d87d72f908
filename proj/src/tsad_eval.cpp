#include "genias/tsad_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "genias/data.hpp"
#include "genias/gen_quality.hpp"
#include "genias/objectives.hpp"

namespace genias {

std::vector<double> recon_score(const ModelParams& model, std::span<const Window> windows) {
  std::vector<double> scores;
  scores.reserve(windows.size());
  constexpr std::size_t kChunk = 128;
  for (std::size_t s = 0; s < windows.size(); s += kChunk) {
    auto chunk = windows.subspan(s, std::min(kChunk, windows.size() - s));
    const auto lat = encode(model, chunk);
    std::vector<std::vector<double>> mus;
    mus.reserve(lat.size());
    for (const auto& l : lat) mus.push_back(l.mu);
    const auto recon = decode(model, mus);
    for (std::size_t i = 0; i < chunk.size(); ++i) scores.push_back(mse_distance(chunk[i], recon[i]));
  }
  return scores;
}

namespace {
constexpr int kC0 = 16;
constexpr int kC1 = 16;
}  // namespace

ClassifierDetector::ClassifierDetector(int dims, std::uint64_t seed)
    : dims_(dims),
      conv0_("clf.conv0", ConvGeom::causal(dims, kC0, 3, 1)),
      conv1_("clf.conv1", ConvGeom::causal(kC0, kC1, 3, 2)),
      head_("clf.head", 2 * kC1, 1) {
  Rng rng(seed);
  conv0_.init(rng);
  conv1_.init(rng);
  head_.init(rng);
}

std::vector<nn::Parameter*> ClassifierDetector::parameters() {
  return {&conv0_.weight, &conv0_.bias, &conv1_.weight, &conv1_.bias, &head_.weight, &head_.bias};
}

ClassifierDetector::Tape ClassifierDetector::forward(const Tensor3& x) const {
  if (x.c != dims_) throw ShapeError("classifier: dimension mismatch");
  Tape t;
  t.x = x;
  t.pre0 = conv0_.forward(x);
  t.act0 = nn::relu(t.pre0);
  t.pre1 = conv1_.forward(t.act0);
  t.act1 = nn::relu(t.pre1);
  t.pooled = Tensor3(x.n, 2 * kC1, 1);
  t.argmax.assign(static_cast<std::size_t>(x.n) * kC1, 0);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < kC1; ++c) {
      double sum = 0.0, best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int s = 0; s < t.act1.t; ++s) {
        const double v = t.act1(n, c, s);
        sum += v;
        if (v > best) {
          best = v;
          arg = s;
        }
      }
      t.pooled(n, c, 0) = sum / t.act1.t;
      t.pooled(n, kC1 + c, 0) = best;
      t.argmax[static_cast<std::size_t>(n) * kC1 + c] = arg;
    }
  t.logit = head_.forward(t.pooled);
  return t;
}

void ClassifierDetector::backward(const Tape& t, const Tensor3& g_logit) {
  Tensor3 g_pool = head_.backward(t.pooled, g_logit);
  Tensor3 g_act1(t.act1.n, kC1, t.act1.t);
  for (int n = 0; n < t.act1.n; ++n)
    for (int c = 0; c < kC1; ++c) {
      const double g_avg = g_pool(n, c, 0) / t.act1.t;
      for (int s = 0; s < t.act1.t; ++s) g_act1(n, c, s) = g_avg;
      g_act1(n, c, t.argmax[static_cast<std::size_t>(n) * kC1 + c]) += g_pool(n, kC1 + c, 0);
    }
  Tensor3 g_act0 = conv1_.backward(t.act0, nn::relu_backward(t.pre1, g_act1));
  kernels::conv1d_backward(t.x, conv0_.weight.value, nn::relu_backward(t.pre0, g_act0),
                           conv0_.geom, nullptr, conv0_.weight.grad, conv0_.bias.grad);
}

std::vector<double> ClassifierDetector::score(std::span<const Window> windows) const {
  std::vector<double> out;
  out.reserve(windows.size());
  constexpr std::size_t kChunk = 256;
  for (std::size_t s = 0; s < windows.size(); s += kChunk) {
    auto chunk = windows.subspan(s, std::min(kChunk, windows.size() - s));
    auto tape = forward(to_batch(chunk));
    for (int n = 0; n < tape.logit.n; ++n) out.push_back(nn::sigmoid(tape.logit(n, 0, 0)));
  }
  return out;
}

ClassifierDetector train_classifier_detector(std::span<const Window> normals,
                                             std::span<const Window> anomalies,
                                             std::uint64_t seed, const ClassifierOptions& options) {
  if (normals.empty() || anomalies.empty())
    throw ValidationError("train_classifier_detector: both classes need at least one window");
  ClassifierDetector clf(static_cast<int>(normals.front().dims), seed);
  std::vector<const Window*> all;
  std::vector<double> target;
  for (const auto& w : normals) {
    all.push_back(&w);
    target.push_back(0.0);
  }
  for (const auto& w : anomalies) {
    all.push_back(&w);
    target.push_back(1.0);
  }
  // Class-balanced BCE.
  const double w_pos = 0.5 * static_cast<double>(all.size()) / static_cast<double>(anomalies.size());
  const double w_neg = 0.5 * static_cast<double>(all.size()) / static_cast<double>(normals.size());

  auto params = clf.parameters();
  nn::Adam adam(params, {options.learning_rate});
  Rng rng = derive_rng(seed, 2);
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(std::max(1, options.batch_size));
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < order.size(); s += batch) {
      const std::size_t e = std::min(order.size(), s + batch);
      std::vector<Window> xs;
      for (std::size_t k = s; k < e; ++k) xs.push_back(*all[order[k]]);
      auto tape = clf.forward(to_batch(xs));
      Tensor3 g(tape.logit.n, 1, 1);
      for (int n = 0; n < tape.logit.n; ++n) {
        const double y = target[order[s + n]];
        const double p = nn::sigmoid(tape.logit(n, 0, 0));
        g(n, 0, 0) = (y > 0.5 ? w_pos : w_neg) * (p - y) / tape.logit.n;
      }
      for (auto* p : params) p->zero_grad();
      clf.backward(tape, g);
      adam.step(params);
    }
  }
  return clf;
}

DetectionMetrics detection_metrics(const ScoredWindows& scored) {
  const auto& s = scored.scores;
  const auto& y = scored.labels;
  if (s.size() != y.size()) throw MetricError("detection_metrics: scores and labels differ in length");
  const auto pos = static_cast<std::size_t>(std::count_if(y.begin(), y.end(), [](auto l) { return l != 0; }));
  const std::size_t neg = y.size() - pos;
  if (pos == 0 || neg == 0) throw MetricError("detection_metrics: labels must contain both classes");
  for (double v : s)
    if (!std::isfinite(v)) throw MetricError("detection_metrics: non-finite score");

  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return s[a] > s[b]; });

  DetectionMetrics m;
  // Threshold +inf predicts nothing: F1 = 0.
  m.best_f1 = 0.0;
  m.best_threshold = std::numeric_limits<double>::infinity();
  std::size_t tp = 0, fp = 0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    const double value = s[idx[i]];
    std::size_t j = i;
    for (; j < idx.size() && s[idx[j]] == value; ++j) (y[idx[j]] ? tp : fp) += 1;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(pos);
    m.aupr += (recall - prev_recall) * precision;
    prev_recall = recall;
    const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + (pos - tp));
    if (f1 > m.best_f1) {
      m.best_f1 = f1;
      m.best_threshold = j < idx.size() ? 0.5 * (value + s[idx[j]])
                                        : -std::numeric_limits<double>::infinity();
    }
    i = j;
  }

  // Mann-Whitney: ascending groups, count negatives strictly below each positive.
  double wins = 0.0;
  std::size_t neg_below = 0;
  for (std::size_t i = idx.size(); i > 0;) {
    const double value = s[idx[i - 1]];
    std::size_t gp = 0, gn = 0;
    std::size_t j = i;
    for (; j > 0 && s[idx[j - 1]] == value; --j) (y[idx[j - 1]] ? gp : gn) += 1;
    wins += static_cast<double>(gp) * (static_cast<double>(neg_below) + 0.5 * static_cast<double>(gn));
    neg_below += gn;
    i = j;
  }
  m.auroc = wins / (static_cast<double>(pos) * static_cast<double>(neg));
  return m;
}

}  // namespace genias
