#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace genias {

/// TCN-VAE shape. The decoder mirrors the encoder channels and upsamples twice by
/// stride 2, so window_length must be divisible by 4.
struct Architecture {
  int window_length = 200;
  int dims = 1;
  int latent = 50;
  std::vector<int> channels{32, 64, 64};
  std::vector<int> dilations{1, 2, 4};
  int kernel = 3;
  double dropout = 0.1;
  /// One perturbation scale per latent dimension instead of a single scalar.
  bool vector_psi = false;

  void validate() const;
  bool operator==(const Architecture&) const = default;
};

enum class KlMode { enhanced, exact };

/// Training hyperparameters. `for_dims` fills the dimension-dependent defaults.
struct GenConfig {
  double alpha = 1.0;
  double beta = 0.1;
  double gamma = 0.0;
  double zeta = 0.1;
  double delta_min = 0.1;
  double delta_max = 0.2;
  double sigma_prior = 0.5;
  KlMode kl_mode = KlMode::enhanced;

  int batch_size = 100;
  double learning_rate = 1e-4;
  int max_epochs = 1000;
  int patience = 100;
  int plateau_epochs = 25;
  double min_improvement = 1e-5;
  double min_lr = 1e-6;
  double grad_clip = 5.0;

  Architecture arch;

  /// Defaults for a D-dimensional series: L = 50 and gamma = 0 when D = 1, else 100 and 0.01.
  static GenConfig for_dims(int window_length, int dims);
  void validate() const;
};

std::string to_string(KlMode m);
KlMode parse_kl_mode(const std::string& s);

}  // namespace genias
