#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "genias/data.hpp"
#include "genias/objectives.hpp"
#include "genias/tsad_eval.hpp"
#include "test_support.hpp"

using namespace genias;

namespace {

struct Counts {
  double f1, precision, recall;
};

Counts at_threshold(const ScoredWindows& s, double thr) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    const bool pred = s.scores[i] > thr;
    if (pred && s.labels[i]) ++tp;
    if (pred && !s.labels[i]) ++fp;
    if (!pred && s.labels[i]) ++fn;
  }
  const double f1 = 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
  const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
  const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return {f1, p, r};
}

std::vector<double> thresholds(const ScoredWindows& s) {
  std::set<double> u(s.scores.begin(), s.scores.end());
  std::vector<double> v(u.rbegin(), u.rend());
  std::vector<double> t{std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i + 1 < v.size(); ++i) t.push_back(0.5 * (v[i] + v[i + 1]));
  t.push_back(-std::numeric_limits<double>::infinity());
  return t;
}

double brute_best_f1(const ScoredWindows& s) {
  double best = 0.0;
  for (double t : thresholds(s)) best = std::max(best, at_threshold(s, t).f1);
  return best;
}

double brute_ap(const ScoredWindows& s) {
  double ap = 0.0, prev_r = 0.0;
  for (double t : thresholds(s)) {
    auto c = at_threshold(s, t);
    ap += (c.recall - prev_r) * c.precision;
    prev_r = c.recall;
  }
  return ap;
}

double brute_auroc(const ScoredWindows& s) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.scores.size(); ++i)
    for (std::size_t j = 0; j < s.scores.size(); ++j) {
      if (!s.labels[i] || s.labels[j]) continue;
      pairs += 1.0;
      if (s.scores[i] > s.scores[j]) wins += 1.0;
      if (s.scores[i] == s.scores[j]) wins += 0.5;
    }
  return wins / pairs;
}

ScoredWindows random_instance(Rng& rng) {
  std::uniform_int_distribution<int> size(2, 200), levels(2, 30);
  const int n = size(rng), q = levels(rng);
  std::uniform_int_distribution<int> score(0, q);
  std::bernoulli_distribution lab(0.3);
  ScoredWindows s;
  for (int i = 0; i < n; ++i) {
    s.scores.push_back(static_cast<double>(score(rng)) / q);  // coarse grid forces ties
    s.labels.push_back(lab(rng));
  }
  s.labels[0] = 1;
  s.labels[1] = 0;
  return s;
}

}  // namespace

TEST(Detection, WorkedExample) {
  ScoredWindows s{{0.9, 0.8, 0.2, 0.1}, {1, 0, 1, 0}};
  auto m = detection_metrics(s);
  EXPECT_DOUBLE_EQ(m.auroc, 0.75);
  EXPECT_DOUBLE_EQ(m.best_f1, brute_best_f1(s));
  EXPECT_DOUBLE_EQ(m.aupr, 0.5 * 1.0 + 0.5 * (2.0 / 3.0));
}

TEST(Detection, PerfectSeparation) {
  ScoredWindows s{{0.1, 0.95, 0.3, 0.9, 0.2}, {0, 1, 0, 1, 0}};
  auto m = detection_metrics(s);
  EXPECT_EQ(m.best_f1, 1.0);
  EXPECT_EQ(m.aupr, 1.0);
  EXPECT_EQ(m.auroc, 1.0);
  EXPECT_DOUBLE_EQ(m.best_threshold, 0.6);
}

TEST(Detection, MatchesBruteForceOracles) {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    auto s = random_instance(rng);
    auto m = detection_metrics(s);
    EXPECT_DOUBLE_EQ(m.best_f1, brute_best_f1(s));
    EXPECT_EQ(m.auroc, brute_auroc(s));
    EXPECT_NEAR(m.aupr, brute_ap(s), 1e-12);
    EXPECT_DOUBLE_EQ(at_threshold(s, m.best_threshold).f1, m.best_f1);
  }
}

TEST(Detection, ShuffledLabelsGiveChance) {
  Rng rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution lab(0.5);
  ScoredWindows s;
  for (int i = 0; i < 10000; ++i) {
    s.scores.push_back(u(rng));
    s.labels.push_back(lab(rng));
  }
  EXPECT_NEAR(detection_metrics(s).auroc, 0.5, 0.02);
}

TEST(Detection, MonotoneTransformInvariance) {
  Rng rng(14);
  for (int i = 0; i < 20; ++i) {
    auto s = random_instance(rng);
    auto t = s;
    for (auto& v : t.scores) v = std::exp(3.0 * v) + 7.0;
    EXPECT_EQ(detection_metrics(s).auroc, detection_metrics(t).auroc);
    EXPECT_DOUBLE_EQ(detection_metrics(s).best_f1, detection_metrics(t).best_f1);
    EXPECT_NEAR(detection_metrics(s).aupr, detection_metrics(t).aupr, 1e-12);
  }
}

TEST(Detection, Errors) {
  ScoredWindows one{{0.1, 0.2}, {1, 1}};
  EXPECT_THROW(detection_metrics(one), MetricError);
  ScoredWindows len{{0.1, 0.2}, {1}};
  EXPECT_THROW(detection_metrics(len), MetricError);
  ScoredWindows nan{{0.1, std::nan("")}, {1, 0}};
  EXPECT_THROW(detection_metrics(nan), MetricError);
}

TEST(ReconScore, DeterministicAndNonNegative) {
  auto c = GenConfig::for_dims(16, 1);
  c.arch.latent = 3;
  c.arch.channels = {4, 4, 4};
  auto model = init_model(c, 2);
  auto xs = synth_normal(NormalKind::sine_mix, 16, 1, 6, 1);
  auto a = recon_score(model, xs), b = recon_score(model, xs);
  EXPECT_EQ(a, b);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_GE(a[i], 0.0);
    auto lat = encode(model, xs[i]);
    EXPECT_DOUBLE_EQ(a[i], mse_distance(xs[i], decode(model, lat.mu)));
  }
  // A window equal to its own reconstruction scores 0.
  std::vector<Window> fixed{decode(model, encode(model, xs[0]).mu)};
  auto r = recon_score(model, fixed);
  auto again = decode(model, encode(model, fixed[0]).mu);
  EXPECT_DOUBLE_EQ(r[0], mse_distance(fixed[0], again));
}

TEST(Classifier, BoundedSeededAndFitsTraining) {
  auto normals = synth_normal(NormalKind::sine_mix, 16, 1, 40, 3);
  normals = apply_normalizer(normals, fit_normalizer(normals));
  auto anomalies = normals;
  for (std::size_t i = 0; i < anomalies.size(); ++i)
    for (std::size_t t = 4; t < 8; ++t) anomalies[i].at(t, 0) = 1.0 - anomalies[i].at(t, 0) * 0.2;
  ClassifierOptions opt;
  opt.epochs = 200;
  auto a = train_classifier_detector(normals, anomalies, 5, opt);
  auto b = train_classifier_detector(normals, anomalies, 5, opt);
  auto sa = a.score(anomalies), sb = b.score(anomalies);
  EXPECT_EQ(sa, sb);
  std::size_t above = 0;
  for (double v : sa) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    above += v > 0.5;
  }
  EXPECT_GE(above, static_cast<std::size_t>(0.9 * anomalies.size()));
  for (double v : a.score(normals)) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  std::vector<Window> none;
  EXPECT_THROW(train_classifier_detector(none, anomalies, 1, opt), ValidationError);
}
