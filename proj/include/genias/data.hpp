#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "genias/tensor.hpp"

namespace genias {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A raw multivariate series: values[t * dims + d].
struct RawSeries {
  std::string name;
  std::size_t steps = 0;
  std::size_t dims = 0;
  std::vector<double> values;
  std::optional<std::vector<std::uint8_t>> labels;

  double at(std::size_t t, std::size_t d) const { return values[t * dims + d]; }
};

enum class SeriesFormat { csv, binary };

/// Reads a series from `path`. A sibling `<stem>.labels.csv` is attached when present.
RawSeries load_series(const std::filesystem::path& path, SeriesFormat format);
void save_series_csv(const RawSeries& series, const std::filesystem::path& path);
void save_series_binary(const RawSeries& series, const std::filesystem::path& path);
std::filesystem::path labels_path_for(const std::filesystem::path& path);

/// Binary mask file: magic "GTM1", u32 rows, u32 cols, u8 row-major payload.
void save_mask_binary(std::span<const std::uint8_t> mask, std::uint32_t rows, std::uint32_t cols,
                      const std::filesystem::path& path);
std::vector<std::uint8_t> load_mask_binary(const std::filesystem::path& path, std::uint32_t& rows,
                                           std::uint32_t& cols);

std::vector<Window> make_windows(const RawSeries& series, std::size_t length, std::size_t stride);

/// Concatenates equally shaped windows into one series (window-major rows).
RawSeries windows_to_series(std::span<const Window> windows, std::string name);
std::vector<Window> series_to_windows(const RawSeries& series, std::size_t length);

struct NormStats {
  std::vector<double> min;
  std::vector<double> max;
};

NormStats fit_normalizer(std::span<const Window> train);
std::vector<Window> apply_normalizer(std::span<const Window> windows, const NormStats& stats);
std::vector<Window> invert_normalizer(std::span<const Window> windows, const NormStats& stats);

enum class NormalKind { sine_mix, ar_process };
enum class AnomalyKind { spike, level_shift, noise_burst };

std::vector<Window> synth_normal(NormalKind kind, std::size_t length, std::size_t dims,
                                 std::size_t count, std::uint64_t seed);

/// Corrupts a seeded subset (`fraction` of the windows, at least one) with one contiguous
/// segment each. Returns the corrupted windows and per-window labels.
std::pair<std::vector<Window>, std::vector<std::uint8_t>> synth_inject(
    std::span<const Window> windows, AnomalyKind kind, double magnitude, std::uint64_t seed,
    double fraction = 0.5);

std::set<std::size_t> zero_dims(const Window& x);

NormalKind parse_normal_kind(const std::string& s);
AnomalyKind parse_anomaly_kind(const std::string& s);

}  // namespace genias
