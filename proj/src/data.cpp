#include "genias/data.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "genias/rng.hpp"

namespace genias {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

constexpr char kSeriesMagic[4] = {'G', 'T', 'S', '1'};
constexpr char kMaskMagic[4] = {'G', 'T', 'M', '1'};

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col,
                  const fs::path& path) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
    throw ValidationError(path.string() + ": non-numeric value '" + cell + "' at row " +
                          std::to_string(row) + ", column " + std::to_string(col));
  }
  if (!std::isfinite(v)) {
    throw ValidationError(path.string() + ": non-finite value at row " + std::to_string(row) +
                          ", column " + std::to_string(col));
  }
  return v;
}

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const fs::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw FormatError(path.string() + ": truncated file");
  return v;
}

std::vector<std::uint8_t> load_labels(const fs::path& path, std::size_t expected) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open labels file " + path.string());
  std::string line;
  std::getline(in, line);
  if (trim(line) != "label") throw FormatError(path.string() + ": expected header 'label'");
  std::vector<std::uint8_t> labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    auto cell = trim(line);
    if (cell.empty()) continue;
    if (cell != "0" && cell != "1")
      throw ValidationError(path.string() + ": label must be 0 or 1 at row " + std::to_string(row));
    labels.push_back(cell == "1" ? 1 : 0);
  }
  if (labels.size() != expected) {
    throw ValidationError(path.string() + ": " + std::to_string(labels.size()) +
                          " labels for " + std::to_string(expected) + " timesteps");
  }
  return labels;
}

RawSeries load_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  RawSeries s;
  s.name = path.stem().string();
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  auto header = split_csv(line);
  for (std::size_t d = 0; d < header.size(); ++d) {
    if (header[d] != "dim_" + std::to_string(d))
      throw FormatError(path.string() + ": bad header cell '" + header[d] + "' at column " +
                        std::to_string(d));
  }
  s.dims = header.size();
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != s.dims) {
      throw FormatError(path.string() + ": row " + std::to_string(row) + " has " +
                        std::to_string(cells.size()) + " columns, expected " +
                        std::to_string(s.dims));
    }
    for (std::size_t d = 0; d < s.dims; ++d) s.values.push_back(parse_cell(cells[d], row, d, path));
    ++s.steps;
  }
  return s;
}

RawSeries load_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kSeriesMagic, 4) != 0)
    throw FormatError(path.string() + ": bad magic, expected GTS1");
  RawSeries s;
  s.name = path.stem().string();
  s.steps = read_pod<std::uint32_t>(in, path);
  s.dims = read_pod<std::uint32_t>(in, path);
  s.values.resize(s.steps * s.dims);
  if (!in.read(reinterpret_cast<char*>(s.values.data()),
               static_cast<std::streamsize>(s.values.size() * sizeof(double))))
    throw FormatError(path.string() + ": truncated payload");
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (!std::isfinite(s.values[i]))
      throw ValidationError(path.string() + ": non-finite value at row " +
                            std::to_string(i / s.dims) + ", column " + std::to_string(i % s.dims));
  }
  return s;
}

}  // namespace

fs::path labels_path_for(const fs::path& path) {
  return path.parent_path() / (path.stem().string() + ".labels.csv");
}

RawSeries load_series(const fs::path& path, SeriesFormat format) {
  if (!fs::exists(path)) throw FormatError("no such file: " + path.string());
  RawSeries s = format == SeriesFormat::csv ? load_csv(path) : load_binary(path);
  if (s.dims == 0) throw FormatError(path.string() + ": zero dimensions");
  auto lp = labels_path_for(path);
  if (fs::exists(lp)) s.labels = load_labels(lp, s.steps);
  return s;
}

void save_series_csv(const RawSeries& series, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  for (std::size_t d = 0; d < series.dims; ++d) out << (d ? "," : "") << "dim_" << d;
  out << '\n';
  char buf[64];
  for (std::size_t t = 0; t < series.steps; ++t) {
    for (std::size_t d = 0; d < series.dims; ++d) {
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, series.at(t, d));
      out << (d ? "," : "") << std::string_view(buf, p - buf);
    }
    out << '\n';
  }
  if (series.labels) {
    std::ofstream lab(labels_path_for(path));
    lab << "label\n";
    for (auto l : *series.labels) lab << int(l) << '\n';
  }
}

void save_series_binary(const RawSeries& series, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(kSeriesMagic, 4);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(series.steps));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(series.dims));
  out.write(reinterpret_cast<const char*>(series.values.data()),
            static_cast<std::streamsize>(series.values.size() * sizeof(double)));
}

void save_mask_binary(std::span<const std::uint8_t> mask, std::uint32_t rows, std::uint32_t cols,
                      const fs::path& path) {
  if (mask.size() != static_cast<std::size_t>(rows) * cols)
    throw ShapeError("mask size does not match rows x cols");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(kMaskMagic, 4);
  write_pod(out, rows);
  write_pod(out, cols);
  out.write(reinterpret_cast<const char*>(mask.data()), static_cast<std::streamsize>(mask.size()));
}

std::vector<std::uint8_t> load_mask_binary(const fs::path& path, std::uint32_t& rows,
                                           std::uint32_t& cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMaskMagic, 4) != 0)
    throw FormatError(path.string() + ": bad magic, expected GTM1");
  rows = read_pod<std::uint32_t>(in, path);
  cols = read_pod<std::uint32_t>(in, path);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(rows) * cols);
  if (!in.read(reinterpret_cast<char*>(mask.data()), static_cast<std::streamsize>(mask.size())))
    throw FormatError(path.string() + ": truncated payload");
  return mask;
}

std::vector<Window> make_windows(const RawSeries& series, std::size_t length, std::size_t stride) {
  if (length == 0 || stride == 0) throw ParameterError("window length and stride must be positive");
  if (length > series.steps) {
    throw ValidationError("empty input: window length " + std::to_string(length) +
                          " exceeds series length " + std::to_string(series.steps));
  }
  std::vector<Window> out;
  const std::size_t count = (series.steps - length) / stride + 1;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t start = i * stride;
    Window w(length, series.dims);
    std::copy_n(series.values.begin() + static_cast<std::ptrdiff_t>(start * series.dims),
                length * series.dims, w.values.begin());
    w.origin = {series.name, start};
    if (series.labels) {
      const auto& lab = *series.labels;
      w.label = std::any_of(lab.begin() + static_cast<std::ptrdiff_t>(start),
                            lab.begin() + static_cast<std::ptrdiff_t>(start + length),
                            [](auto l) { return l != 0; });
    }
    out.push_back(std::move(w));
  }
  return out;
}

RawSeries windows_to_series(std::span<const Window> windows, std::string name) {
  RawSeries s;
  s.name = std::move(name);
  if (windows.empty()) return s;
  s.dims = windows.front().dims;
  for (const auto& w : windows) {
    require_same_shape(windows.front(), w, "windows_to_series");
    s.values.insert(s.values.end(), w.values.begin(), w.values.end());
    s.steps += w.length;
  }
  return s;
}

std::vector<Window> series_to_windows(const RawSeries& series, std::size_t length) {
  if (length == 0 || series.steps % length != 0)
    throw ShapeError("series length is not a multiple of the window length");
  return make_windows(series, length, length);
}

NormStats fit_normalizer(std::span<const Window> train) {
  if (train.empty()) throw ValidationError("fit_normalizer: no training windows");
  const std::size_t dims = train.front().dims;
  NormStats s{std::vector<double>(dims, std::numeric_limits<double>::infinity()),
              std::vector<double>(dims, -std::numeric_limits<double>::infinity())};
  for (const auto& w : train) {
    if (w.dims != dims) throw ShapeError("fit_normalizer: inconsistent dimensionality");
    for (std::size_t t = 0; t < w.length; ++t)
      for (std::size_t d = 0; d < dims; ++d) {
        s.min[d] = std::min(s.min[d], w.at(t, d));
        s.max[d] = std::max(s.max[d], w.at(t, d));
      }
  }
  return s;
}

std::vector<Window> apply_normalizer(std::span<const Window> windows, const NormStats& stats) {
  std::vector<Window> out(windows.begin(), windows.end());
  for (auto& w : out) {
    if (w.dims != stats.min.size()) throw ShapeError("apply_normalizer: dimension mismatch");
    for (std::size_t t = 0; t < w.length; ++t)
      for (std::size_t d = 0; d < w.dims; ++d) {
        const double range = stats.max[d] - stats.min[d];
        w.at(t, d) = range > 0.0 ? (w.at(t, d) - stats.min[d]) / range : 0.0;
      }
  }
  return out;
}

std::vector<Window> invert_normalizer(std::span<const Window> windows, const NormStats& stats) {
  std::vector<Window> out(windows.begin(), windows.end());
  for (auto& w : out) {
    if (w.dims != stats.min.size()) throw ShapeError("invert_normalizer: dimension mismatch");
    for (std::size_t t = 0; t < w.length; ++t)
      for (std::size_t d = 0; d < w.dims; ++d)
        w.at(t, d) = stats.min[d] + w.at(t, d) * (stats.max[d] - stats.min[d]);
  }
  return out;
}

std::vector<Window> synth_normal(NormalKind kind, std::size_t length, std::size_t dims,
                                 std::size_t count, std::uint64_t seed) {
  if (count == 0 || length == 0 || dims == 0)
    throw ParameterError("synth_normal: length, dims and count must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  const auto n = static_cast<double>(length);

  std::vector<Window> out;
  out.reserve(count);
  if (kind == NormalKind::sine_mix) {
    constexpr int kComponents = 2;
    struct Component {
      double amplitude, period, phase;
    };
    std::vector<std::array<Component, kComponents>> comps(dims);
    for (auto& dim : comps)
      for (auto& c : dim)
        c = {0.5 + unit(rng), n / 4.0 + unit(rng) * (3.0 * n / 4.0), unit(rng) * two_pi};
    for (std::size_t i = 0; i < count; ++i) {
      Window w(length, dims);
      const double shift = unit(rng) * 1000.0;
      for (std::size_t t = 0; t < length; ++t)
        for (std::size_t d = 0; d < dims; ++d) {
          double v = 0.0;
          for (const auto& c : comps[d])
            v += c.amplitude * std::sin(two_pi * (static_cast<double>(t) + shift) / c.period + c.phase);
          w.at(t, d) = v + 0.05 * noise(rng);
        }
      w.origin = {"sine_mix", i * length};
      out.push_back(std::move(w));
    }
  } else {
    // AR(2) with complex-conjugate roots inside the unit circle.
    std::vector<std::pair<double, double>> coef(dims);
    for (auto& [a1, a2] : coef) {
      const double r = 0.6 + 0.35 * unit(rng);
      const double theta = 0.05 + 0.45 * unit(rng);
      a1 = 2.0 * r * std::cos(theta);
      a2 = -r * r;
    }
    constexpr std::size_t kBurnIn = 50;
    for (std::size_t i = 0; i < count; ++i) {
      Window w(length, dims);
      for (std::size_t d = 0; d < dims; ++d) {
        double x1 = 0.0, x2 = 0.0;
        for (std::size_t t = 0; t < kBurnIn + length; ++t) {
          const double x = coef[d].first * x1 + coef[d].second * x2 + 0.1 * noise(rng);
          x2 = x1;
          x1 = x;
          if (t >= kBurnIn) w.at(t - kBurnIn, d) = x;
        }
      }
      w.origin = {"ar_process", i * length};
      out.push_back(std::move(w));
    }
  }
  return out;
}

std::pair<std::vector<Window>, std::vector<std::uint8_t>> synth_inject(
    std::span<const Window> windows, AnomalyKind kind, double magnitude, std::uint64_t seed,
    double fraction) {
  if (!(magnitude > 0.0)) throw ParameterError("synth_inject: magnitude must be positive");
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ParameterError("synth_inject: fraction must be in (0, 1]");
  std::vector<Window> out(windows.begin(), windows.end());
  std::vector<std::uint8_t> labels(out.size(), 0);
  if (out.empty()) return {out, labels};

  Rng rng(seed);
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto picks = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(out.size()))));

  std::normal_distribution<double> noise(0.0, magnitude);
  for (std::size_t k = 0; k < picks; ++k) {
    Window& w = out[order[k]];
    const std::size_t T = w.length;
    const std::size_t d = std::uniform_int_distribution<std::size_t>(0, w.dims - 1)(rng);
    const double sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
    std::size_t span_len = 1;
    if (kind != AnomalyKind::spike) {
      const std::size_t lo = std::max<std::size_t>(1, T / 8);
      const std::size_t hi = std::max<std::size_t>(lo, T / 2);
      span_len = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    }
    const std::size_t start = std::uniform_int_distribution<std::size_t>(0, T - span_len)(rng);
    for (std::size_t t = start; t < start + span_len; ++t) {
      switch (kind) {
        case AnomalyKind::spike:
        case AnomalyKind::level_shift:
          w.at(t, d) += sign * magnitude;
          break;
        case AnomalyKind::noise_burst:
          w.at(t, d) += noise(rng);
          break;
      }
    }
    w.label = true;
    labels[order[k]] = 1;
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!labels[i]) out[i].label = false;
  return {out, labels};
}

std::set<std::size_t> zero_dims(const Window& x) {
  std::set<std::size_t> out;
  for (std::size_t d = 0; d < x.dims; ++d) {
    bool all_zero = true;
    for (std::size_t t = 0; t < x.length && all_zero; ++t) all_zero = x.at(t, d) == 0.0;
    if (all_zero) out.insert(d);
  }
  return out;
}

NormalKind parse_normal_kind(const std::string& s) {
  if (s == "sine_mix") return NormalKind::sine_mix;
  if (s == "ar_process") return NormalKind::ar_process;
  throw ParameterError("unknown normal kind '" + s + "'");
}

AnomalyKind parse_anomaly_kind(const std::string& s) {
  if (s == "spike") return AnomalyKind::spike;
  if (s == "level_shift") return AnomalyKind::level_shift;
  if (s == "noise_burst") return AnomalyKind::noise_burst;
  throw ParameterError("unknown anomaly kind '" + s + "'");
}

}  // namespace genias
