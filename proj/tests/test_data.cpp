#include <gtest/gtest.h>

#include <fstream>

#include "genias/data.hpp"
#include "test_support.hpp"

using namespace genias;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& p, const std::string& s) {
  std::ofstream(p) << s;
}

RawSeries ramp_series(std::size_t n, std::size_t d) {
  RawSeries s;
  s.steps = n;
  s.dims = d;
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t j = 0; j < d; ++j) s.values.push_back(static_cast<double>(t * 10 + j));
  return s;
}

}  // namespace

TEST(LoadSeries, ParsesSmallCsv) {
  auto dir = testutil::scratch_dir("csv_ok");
  write_file(dir / "a.csv", "dim_0,dim_1\n1,2\n3.5,-4\n5e-1,6\n");
  auto s = load_series(dir / "a.csv", SeriesFormat::csv);
  EXPECT_EQ(s.steps, 3u);
  EXPECT_EQ(s.dims, 2u);
  EXPECT_DOUBLE_EQ(s.at(1, 0), 3.5);
  EXPECT_DOUBLE_EQ(s.at(2, 0), 0.5);
  EXPECT_FALSE(s.labels.has_value());
}

TEST(LoadSeries, NonNumericCellNamesRow) {
  auto dir = testutil::scratch_dir("csv_bad");
  write_file(dir / "a.csv", "dim_0,dim_1\n1,abc\n3,4\n");
  try {
    load_series(dir / "a.csv", SeriesFormat::csv);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
}

TEST(LoadSeries, NonFiniteCellRejected) {
  auto dir = testutil::scratch_dir("csv_nan");
  write_file(dir / "a.csv", "dim_0\n1\nnan\n");
  EXPECT_THROW(load_series(dir / "a.csv", SeriesFormat::csv), ValidationError);
  write_file(dir / "b.csv", "dim_0\ninf\n");
  EXPECT_THROW(load_series(dir / "b.csv", SeriesFormat::csv), ValidationError);
}

TEST(LoadSeries, AttachesSiblingLabels) {
  auto dir = testutil::scratch_dir("csv_labels");
  write_file(dir / "a.csv", "dim_0\n1\n2\n3\n");
  write_file(dir / "a.labels.csv", "label\n0\n1\n0\n");
  auto s = load_series(dir / "a.csv", SeriesFormat::csv);
  ASSERT_TRUE(s.labels.has_value());
  EXPECT_EQ(*s.labels, (std::vector<std::uint8_t>{0, 1, 0}));
  write_file(dir / "a.labels.csv", "label\n0\n1\n");
  EXPECT_THROW(load_series(dir / "a.csv", SeriesFormat::csv), ValidationError);
}

TEST(LoadSeries, MissingFileAndBadHeader) {
  auto dir = testutil::scratch_dir("csv_missing");
  EXPECT_THROW(load_series(dir / "nope.csv", SeriesFormat::csv), FormatError);
  write_file(dir / "h.csv", "x,y\n1,2\n");
  EXPECT_THROW(load_series(dir / "h.csv", SeriesFormat::csv), FormatError);
}

TEST(LoadSeries, CsvAndBinaryRoundTrip) {
  auto dir = testutil::scratch_dir("roundtrip");
  Rng rng(3);
  RawSeries s;
  s.steps = 17;
  s.dims = 3;
  s.values = standard_normal(rng, 51);
  s.labels = std::vector<std::uint8_t>(17, 0);
  (*s.labels)[4] = 1;
  save_series_csv(s, dir / "s.csv");
  save_series_binary(s, dir / "s.gts");
  auto c = load_series(dir / "s.csv", SeriesFormat::csv);
  auto b = load_series(dir / "s.gts", SeriesFormat::binary);
  EXPECT_EQ(c.values, s.values);
  EXPECT_EQ(b.values, s.values);
  EXPECT_EQ(b.dims, 3u);
  ASSERT_TRUE(c.labels.has_value());
  EXPECT_EQ(*c.labels, *s.labels);
}

TEST(LoadSeries, TruncatedBinaryRejected) {
  auto dir = testutil::scratch_dir("trunc");
  auto s = ramp_series(10, 2);
  save_series_binary(s, dir / "s.gts");
  fs::resize_file(dir / "s.gts", fs::file_size(dir / "s.gts") - 8);
  EXPECT_THROW(load_series(dir / "s.gts", SeriesFormat::binary), FormatError);
  write_file(dir / "bad.gts", "XXXX");
  EXPECT_THROW(load_series(dir / "bad.gts", SeriesFormat::binary), FormatError);
}

TEST(MaskFile, RoundTripAndMagic) {
  auto dir = testutil::scratch_dir("mask");
  std::vector<std::uint8_t> m{1, 0, 0, 1, 1, 0};
  save_mask_binary(m, 2, 3, dir / "m.gtm");
  std::uint32_t r = 0, c = 0;
  EXPECT_EQ(load_mask_binary(dir / "m.gtm", r, c), m);
  EXPECT_EQ(r, 2u);
  EXPECT_EQ(c, 3u);
  EXPECT_THROW(save_mask_binary(m, 4, 3, dir / "x.gtm"), ShapeError);
  write_file(dir / "bad.gtm", "GTS1....");
  EXPECT_THROW(load_mask_binary(dir / "bad.gtm", r, c), FormatError);
}

TEST(MakeWindows, SingleFullWindow) {
  auto w = make_windows(ramp_series(10, 1), 10, 1);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].length, 10u);
  EXPECT_EQ(w[0].origin.start, 0u);
}

TEST(MakeWindows, CountAndStarts) {
  auto w = make_windows(ramp_series(10, 1), 4, 2);
  ASSERT_EQ(w.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(w[i].origin.start, 2 * i);
    EXPECT_DOUBLE_EQ(w[i].at(0, 0), 20.0 * i);
  }
}

TEST(MakeWindows, CountFormulaGrid) {
  for (std::size_t n = 1; n <= 30; ++n)
    for (std::size_t t = 1; t <= n; ++t)
      for (std::size_t s = 1; s <= 5; ++s)
        EXPECT_EQ(make_windows(ramp_series(n, 1), t, s).size(), (n - t) / s + 1);
}

TEST(MakeWindows, TooShortIsEmptyInputError) {
  try {
    make_windows(ramp_series(5, 1), 6, 1);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("empty input"), std::string::npos);
  }
}

TEST(MakeWindows, LabelIsAnyCoveredStep) {
  auto s = ramp_series(10, 1);
  s.labels = std::vector<std::uint8_t>(10, 0);
  for (auto& w : make_windows(s, 4, 1)) EXPECT_FALSE(*w.label);
  (*s.labels)[5] = 1;
  auto w = make_windows(s, 4, 1);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(*w[i].label, i >= 2 && i <= 5) << i;
}

TEST(MakeWindows, StrideOneStartsCoverEveryIndexOnce) {
  const std::size_t n = 23, t = 5;
  auto w = make_windows(ramp_series(n, 2), t, 1);
  ASSERT_EQ(w.size(), n - t + 1);
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_EQ(w[i].origin.start, i);
    for (std::size_t k = 0; k < t; ++k) EXPECT_DOUBLE_EQ(w[i].at(k, 1), (i + k) * 10.0 + 1);
  }
}

TEST(Normalizer, MinMaxFormula) {
  Window w(3, 1);
  w.values = {2, 4, 6};
  std::vector<Window> ws{w};
  auto st = fit_normalizer(ws);
  auto n = apply_normalizer(ws, st);
  EXPECT_DOUBLE_EQ(n[0].values[1], 0.5);
}

TEST(Normalizer, ConstantDimensionMapsToZero) {
  Window w(4, 2);
  for (std::size_t t = 0; t < 4; ++t) {
    w.at(t, 0) = 3.0;
    w.at(t, 1) = static_cast<double>(t);
  }
  std::vector<Window> ws{w};
  auto n = apply_normalizer(ws, fit_normalizer(ws));
  for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(n[0].at(t, 0), 0.0);
}

TEST(Normalizer, RangeRoundTripAndIdempotence) {
  Rng rng(9);
  auto ws = testutil::random_windows(20, 16, 3, rng);
  for (auto& w : ws)
    for (auto& v : w.values) v = v * 40.0 - 7.0;
  auto st = fit_normalizer(ws);
  auto n = apply_normalizer(ws, st);
  for (const auto& w : n)
    for (double v : w.values) {
      EXPECT_GE(v, -1e-12);
      EXPECT_LE(v, 1.0 + 1e-12);
    }
  auto back = invert_normalizer(n, st);
  for (std::size_t i = 0; i < ws.size(); ++i)
    for (std::size_t k = 0; k < ws[i].size(); ++k)
      EXPECT_LE(testutil::rel_err(back[i].values[k], ws[i].values[k]), 1e-6);
  auto again = apply_normalizer(n, fit_normalizer(n));
  for (std::size_t i = 0; i < n.size(); ++i)
    for (std::size_t k = 0; k < n[i].size(); ++k) EXPECT_NEAR(again[i].values[k], n[i].values[k], 1e-12);
}

TEST(Normalizer, DimensionMismatch) {
  Rng rng(1);
  auto a = testutil::random_windows(2, 4, 2, rng);
  auto b = testutil::random_windows(2, 4, 3, rng);
  EXPECT_THROW(apply_normalizer(b, fit_normalizer(a)), ShapeError);
  EXPECT_THROW(fit_normalizer(std::vector<Window>{}), ValidationError);
}

TEST(Normalizer, ZeroDimsStableWhenMinIsZero) {
  Rng rng(4);
  auto ws = testutil::random_windows(5, 8, 3, rng);
  for (auto& w : ws) {
    w.at(0, 0) = 0.0;  // every dimension has min 0 across the set
    w.at(0, 1) = 0.0;
    for (std::size_t t = 0; t < 8; ++t) w.at(t, 2) = 0.0;
  }
  ws[1].at(3, 2) = 1.0;
  auto n = apply_normalizer(ws, fit_normalizer(ws));
  for (std::size_t i = 0; i < ws.size(); ++i) EXPECT_EQ(zero_dims(ws[i]), zero_dims(n[i]));
}

TEST(SynthNormal, DeterministicAndShaped) {
  for (auto kind : {NormalKind::sine_mix, NormalKind::ar_process}) {
    auto a = synth_normal(kind, 24, 1, 100, 5);
    auto b = synth_normal(kind, 24, 1, 100, 5);
    auto c = synth_normal(kind, 24, 1, 100, 6);
    ASSERT_EQ(a.size(), 100u);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].length, 24u);
      EXPECT_EQ(a[i].dims, 1u);
      EXPECT_EQ(a[i].values, b[i].values);
      for (double v : a[i].values) EXPECT_TRUE(std::isfinite(v));
    }
    EXPECT_NE(a[0].values, c[0].values);
  }
  EXPECT_THROW(synth_normal(NormalKind::sine_mix, 8, 1, 0, 1), ParameterError);
}

TEST(SynthInject, RejectsNonPositiveMagnitude) {
  auto w = synth_normal(NormalKind::sine_mix, 8, 1, 4, 1);
  EXPECT_THROW(synth_inject(w, AnomalyKind::spike, 0.0, 1), ParameterError);
}

TEST(SynthInject, SpikeOnZeroWindow) {
  std::vector<Window> zeros(6, Window(16, 2, 0.0));
  auto [out, labels] = synth_inject(zeros, AnomalyKind::spike, 0.7, 3);
  std::size_t corrupted = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double m = 0.0;
    for (double v : out[i].values) m = std::max(m, std::abs(v));
    if (labels[i]) {
      ++corrupted;
      EXPECT_DOUBLE_EQ(m, 0.7);
    } else {
      EXPECT_EQ(m, 0.0);
    }
  }
  EXPECT_EQ(corrupted, 3u);
}

TEST(SynthInject, LabelsMarkExactlyTheChangedWindows) {
  auto w = synth_normal(NormalKind::ar_process, 32, 2, 40, 2);
  for (auto kind : {AnomalyKind::spike, AnomalyKind::level_shift, AnomalyKind::noise_burst}) {
    auto [out, labels] = synth_inject(w, kind, 1.0, 8, 0.25);
    std::size_t sum = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      sum += labels[i];
      EXPECT_EQ(labels[i] == 1, out[i].values != w[i].values) << i;
      EXPECT_EQ(out[i].label.value_or(false), labels[i] == 1);
    }
    EXPECT_EQ(sum, 10u);
    auto again = synth_inject(w, kind, 1.0, 8, 0.25);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(again.first[i].values, out[i].values);
  }
}

TEST(SynthInject, CorruptionIsContiguous) {
  std::vector<Window> zeros(20, Window(64, 1, 0.0));
  auto [out, labels] = synth_inject(zeros, AnomalyKind::level_shift, 2.0, 11, 1.0);
  for (const auto& w : out) {
    std::size_t first = w.length, last = 0;
    for (std::size_t t = 0; t < w.length; ++t)
      if (w.values[t] != 0.0) {
        first = std::min(first, t);
        last = t;
      }
    ASSERT_LT(first, w.length);
    for (std::size_t t = first; t <= last; ++t) EXPECT_NE(w.values[t], 0.0);
  }
}

TEST(ZeroDims, Cases) {
  EXPECT_EQ(zero_dims(Window(5, 3, 0.0)), (std::set<std::size_t>{0, 1, 2}));
  EXPECT_TRUE(zero_dims(Window(5, 3, 1.0)).empty());
  Window w(4, 2, 0.0);
  w.at(2, 0) = 0.3;
  EXPECT_EQ(zero_dims(w), (std::set<std::size_t>{1}));
}

TEST(Windows, SeriesRoundTrip) {
  auto w = synth_normal(NormalKind::sine_mix, 12, 2, 7, 3);
  auto s = windows_to_series(w, "x");
  EXPECT_EQ(s.steps, 84u);
  auto back = series_to_windows(s, 12);
  ASSERT_EQ(back.size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(back[i].values, w[i].values);
  EXPECT_THROW(series_to_windows(s, 11), ShapeError);
}

TEST(Windows, BatchPackingRoundTrip) {
  Rng rng(2);
  auto w = testutil::random_windows(3, 5, 2, rng);
  auto b = to_batch(w);
  EXPECT_EQ(b.n, 3);
  EXPECT_EQ(b.c, 2);
  EXPECT_EQ(b.t, 5);
  EXPECT_DOUBLE_EQ(b(1, 1, 3), w[1].at(3, 1));
  auto back = from_batch(b);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back[i].values, w[i].values);
}
