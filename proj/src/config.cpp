#include "genias/config.hpp"

#include <stdexcept>

#include "genias/data.hpp"

namespace genias {

void Architecture::validate() const {
  if (window_length <= 0 || dims <= 0 || latent <= 0)
    throw ParameterError("architecture: window length, dims and latent size must be positive");
  if (window_length % 4 != 0)
    throw ParameterError("architecture: window length must be divisible by 4");
  if (channels.size() != 3 || dilations.size() != 3)
    throw ParameterError("architecture: expected three encoder blocks");
  for (int c : channels)
    if (c <= 0) throw ParameterError("architecture: channel counts must be positive");
  for (int d : dilations)
    if (d <= 0) throw ParameterError("architecture: dilations must be positive");
  if (kernel <= 0 || kernel % 2 == 0)
    throw ParameterError("architecture: kernel size must be a positive odd number");
  if (dropout < 0.0 || dropout >= 1.0) throw ParameterError("architecture: dropout must be in [0, 1)");
}

GenConfig GenConfig::for_dims(int window_length, int dims) {
  GenConfig c;
  c.arch.window_length = window_length;
  c.arch.dims = dims;
  c.arch.latent = dims == 1 ? 50 : 100;
  c.gamma = dims == 1 ? 0.0 : 0.01;
  return c;
}

void GenConfig::validate() const {
  arch.validate();
  if (alpha < 0 || beta < 0 || gamma < 0 || zeta < 0)
    throw ParameterError("config: loss weights must be nonnegative");
  if (!(delta_min > 0.0 && delta_min < delta_max))
    throw ParameterError("config: margins must satisfy 0 < delta_min < delta_max");
  if (!(sigma_prior > 0.0 && sigma_prior <= 1.0))
    throw ParameterError("config: sigma_prior must be in (0, 1]");
  if (batch_size <= 0 || max_epochs <= 0 || patience <= 0)
    throw ParameterError("config: batch size, epochs and patience must be positive");
  if (!(learning_rate > 0.0)) throw ParameterError("config: learning rate must be positive");
}

std::string to_string(KlMode m) { return m == KlMode::enhanced ? "enhanced" : "exact"; }

KlMode parse_kl_mode(const std::string& s) {
  if (s == "enhanced") return KlMode::enhanced;
  if (s == "exact") return KlMode::exact;
  throw ParameterError("unknown kl mode '" + s + "'");
}

}  // namespace genias
