#include <gtest/gtest.h>

#include <cmath>

#include "genias/data.hpp"
#include "genias/injector.hpp"
#include "test_support.hpp"

using namespace genias;

namespace {

Window from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Window w(rows.size(), rows.begin()->size());
  std::size_t i = 0;
  for (auto r : rows)
    for (double v : r) w.values[i++] = v;
  return w;
}

// Direct restatement of the rule, cell by cell.
std::vector<std::uint8_t> oracle_mask(const Window& x, const Window& g, double tau) {
  std::vector<std::uint8_t> m(x.size(), 0);
  for (std::size_t d = 0; d < x.dims; ++d) {
    double lo = x.at(0, d), hi = lo;
    for (std::size_t t = 0; t < x.length; ++t) {
      lo = std::min(lo, x.at(t, d));
      hi = std::max(hi, x.at(t, d));
    }
    for (std::size_t t = 0; t < x.length; ++t) {
      const double dev = (x.at(t, d) - g.at(t, d)) * (x.at(t, d) - g.at(t, d));
      m[t * x.dims + d] = dev > tau * (hi - lo) ? 1 : 0;
    }
  }
  return m;
}

ModelParams tiny_model(int t, int d) {
  auto c = GenConfig::for_dims(t, d);
  c.arch.latent = 3;
  c.arch.channels = {4, 4, 4};
  return init_model(c, 9);
}

}  // namespace

TEST(Deviation, WorkedExample) {
  auto x = from_rows({{0, 0}, {1, 0}});
  auto g = from_rows({{0.9, 0.05}, {1, 0.05}});
  auto p = deviation_patch(x, g, 0.4);
  EXPECT_EQ(p.mask, (std::vector<std::uint8_t>{1, 1, 0, 1}));
  EXPECT_EQ(p.data.values, (std::vector<double>{0.9, 0.05, 1, 0.05}));
  EXPECT_EQ(p.patched_cells(), 3u);
}

TEST(Deviation, ExtremeThresholds) {
  Rng rng(1);
  auto x = testutil::random_window(20, 3, rng);
  auto g = testutil::random_window(20, 3, rng);
  auto none = deviation_patch(x, g, 1e9);
  EXPECT_EQ(none.data.values, x.values);
  EXPECT_EQ(none.patched_cells(), 0u);
  auto all = deviation_patch(x, g, 0.0);
  EXPECT_EQ(all.data.values, g.values);
  EXPECT_EQ(all.patched_cells(), x.size());
  EXPECT_THROW(deviation_patch(x, g, -0.1), std::invalid_argument);
  EXPECT_THROW(deviation_patch(x, Window(20, 2), 0.1), ShapeError);
}

TEST(Deviation, MatchesBruteForceOracle) {
  Rng rng(2);
  std::uniform_real_distribution<double> tau(0.0, 0.6);
  std::uniform_int_distribution<int> len(1, 12), dims(1, 4);
  for (int i = 0; i < 1000; ++i) {
    const auto t = static_cast<std::size_t>(len(rng)), d = static_cast<std::size_t>(dims(rng));
    auto x = testutil::random_window(t, d, rng);
    auto g = testutil::random_window(t, d, rng);
    const double ta = tau(rng);
    auto p = deviation_patch(x, g, ta);
    ASSERT_EQ(p.mask, oracle_mask(x, g, ta));
    for (std::size_t k = 0; k < x.size(); ++k)
      ASSERT_EQ(p.data.values[k], p.mask[k] ? g.values[k] : x.values[k]);
  }
}

TEST(Deviation, MonotoneInTau) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    auto x = testutil::random_window(16, 2, rng);
    auto g = testutil::random_window(16, 2, rng);
    std::size_t prev = x.size() + 1;
    for (double tau : {0.05, 0.2, 0.4}) {
      const auto n = deviation_patch(x, g, tau).patched_cells();
      EXPECT_LE(n, prev);
      prev = n;
    }
  }
}

TEST(Deviation, DimensionsIndependent) {
  Rng rng(4);
  auto x = testutil::random_window(10, 3, rng);
  auto g = testutil::random_window(10, 3, rng);
  auto base = deviation_patch(x, g, 0.2);
  auto x2 = x;
  for (std::size_t t = 0; t < 10; ++t) x2.at(t, 2) = 5.0 * t;
  auto changed = deviation_patch(x2, g, 0.2);
  for (std::size_t t = 0; t < 10; ++t)
    for (std::size_t d = 0; d < 2; ++d) EXPECT_EQ(base.mask[t * 3 + d], changed.mask[t * 3 + d]);
}

TEST(Length, SpanExactAndSeeded) {
  Rng data(5);
  auto x = testutil::random_window(200, 3, data);
  auto g = testutil::random_window(200, 3, data);
  Rng r1(11), r2(11);
  auto a = length_patch(x, g, 0.5, r1);
  auto b = length_patch(x, g, 0.5, r2);
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_EQ(a.patched_cells(), 300u);
  std::size_t first = 200, last = 0;
  for (std::size_t t = 0; t < 200; ++t) {
    const bool on = a.mask[t * 3];
    EXPECT_EQ(a.mask[t * 3 + 1], on);
    EXPECT_EQ(a.mask[t * 3 + 2], on);
    if (on) {
      first = std::min(first, t);
      last = std::max(last, t);
    }
  }
  EXPECT_EQ(last - first + 1, 100u);
  Rng r3(0);
  EXPECT_EQ(length_patch(x, g, 1.0, r3).data.values, g.values);
  EXPECT_THROW(length_patch(x, g, 0.0, r3), std::invalid_argument);
  EXPECT_THROW(length_patch(x, g, 1.5, r3), std::invalid_argument);
}

TEST(Length, RoundingGrid) {
  Rng rng(6);
  for (std::size_t t : {8u, 16u, 32u, 37u})
    for (double portion : {0.1, 0.25, 0.5, 0.9}) {
      auto x = testutil::random_window(t, 1, rng);
      auto g = testutil::random_window(t, 1, rng);
      auto p = length_patch(x, g, portion, rng);
      const auto expect = std::max<std::size_t>(1, std::llround(portion * t));
      EXPECT_EQ(p.patched_cells(), expect) << t << " " << portion;
    }
}

TEST(Compose, OutputFollowsMask) {
  Rng rng(7);
  auto x = testutil::random_window(12, 2, rng);
  auto g = testutil::random_window(12, 2, rng);
  for (auto p : {deviation_patch(x, g, 0.1), length_patch(x, g, 0.3, rng)})
    for (std::size_t k = 0; k < x.size(); ++k)
      EXPECT_EQ(p.data.values[k], p.mask[k] ? g.values[k] : x.values[k]);
}

TEST(Batch, ShapesModesAndSeeds) {
  auto model = tiny_model(16, 2);
  Rng rng(8);
  auto xs = testutil::random_windows(5, 16, 2, rng);
  PatchConfig cfg;
  cfg.seed = 4;
  auto a = batch_inject(model, xs, cfg);
  auto b = batch_inject(model, xs, cfg);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a[i].data.values, b[i].data.values);
    EXPECT_TRUE(a[i].data.same_shape(xs[i]));
  }
  cfg.mode = PatchMode::none;
  auto raw = batch_inject(model, xs, cfg);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(raw[i].patched_cells(), xs[i].size());
    Rng r = derive_rng(cfg.seed, i);
    EXPECT_EQ(raw[i].data.values, generate_anomaly(model, xs[i], r).values);
  }
  cfg.mode = PatchMode::length;
  cfg.portion = 0.5;
  for (const auto& p : batch_inject(model, xs, cfg)) EXPECT_EQ(p.patched_cells(), 16u);
  std::vector<Window> wrong{Window(16, 3)};
  EXPECT_THROW(batch_inject(model, wrong, cfg), ShapeError);
  cfg.portion = 0.0;
  EXPECT_THROW(batch_inject(model, xs, cfg), std::invalid_argument);
  cfg.mode = PatchMode::deviation;
  cfg.tau = -1.0;
  EXPECT_THROW(batch_inject(model, xs, cfg), std::invalid_argument);
  EXPECT_EQ(parse_patch_mode(to_string(PatchMode::length)), PatchMode::length);
  EXPECT_THROW(parse_patch_mode("bogus"), std::invalid_argument);
}

TEST(Batch, TauMonotoneOnModelOutputs) {
  auto model = tiny_model(16, 1);
  auto xs = synth_normal(NormalKind::sine_mix, 16, 1, 20, 3);
  xs = apply_normalizer(xs, fit_normalizer(xs));
  std::size_t prev = SIZE_MAX;
  for (double tau : {0.05, 0.2, 0.4}) {
    PatchConfig cfg;
    cfg.tau = tau;
    cfg.seed = 1;
    std::size_t total = 0;
    for (const auto& p : batch_inject(model, xs, cfg)) total += p.patched_cells();
    EXPECT_LE(total, prev);
    prev = total;
  }
}
