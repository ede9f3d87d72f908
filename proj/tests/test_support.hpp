#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "genias/rng.hpp"
#include "genias/tensor.hpp"

namespace genias::testutil {

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("genias_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline Window random_window(std::size_t t, std::size_t d, Rng& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Window w(t, d);
  for (auto& v : w.values) v = u(rng);
  return w;
}

inline std::vector<Window> random_windows(std::size_t n, std::size_t t, std::size_t d, Rng& rng) {
  std::vector<Window> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_window(t, d, rng));
  return out;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)});
}

}  // namespace genias::testutil
