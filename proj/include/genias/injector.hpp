#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "genias/model.hpp"
#include "genias/rng.hpp"
#include "genias/tensor.hpp"

namespace genias {

enum class PatchMode { deviation, length, none };

struct PatchConfig {
  PatchMode mode = PatchMode::deviation;
  double tau = 0.2;
  double portion = 0.5;
  /// Compare the mean squared deviation of a whole dimension instead of each cell.
  bool per_dimension = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// A window with generated cells patched in. mask[t * dims + d] = 1 where the value
/// came from the generated window.
struct PatchedWindow {
  Window data;
  std::vector<std::uint8_t> mask;
  Origin source;

  std::size_t patched_cells() const;
};

/// Encode, perturb the latent spread by psi, decode.
Window generate_anomaly(const ModelParams& model, const Window& x, Rng& rng);

/// Per dimension d, replaces cells whose squared deviation exceeds tau * (max X_d - min X_d).
PatchedWindow deviation_patch(const Window& x, const Window& generated, double tau,
                              bool per_dimension = false);

/// Replaces all dimensions over one contiguous span of round(portion * T) steps.
PatchedWindow length_patch(const Window& x, const Window& generated, double portion, Rng& rng);

/// Generates and patches one anomaly per window. Window i uses derive_rng(config.seed, i).
std::vector<PatchedWindow> batch_inject(const ModelParams& model, std::span<const Window> windows,
                                        const PatchConfig& config);

std::string to_string(PatchMode m);
PatchMode parse_patch_mode(const std::string& s);

}  // namespace genias
