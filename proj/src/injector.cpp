#include "genias/injector.hpp"

#include <algorithm>
#include <cmath>

#include "genias/data.hpp"

namespace genias {

void PatchConfig::validate() const {
  if (mode == PatchMode::deviation && !(tau >= 0.0))
    throw ParameterError("patch: tau must be nonnegative");
  if (mode == PatchMode::length && !(portion > 0.0 && portion <= 1.0))
    throw ParameterError("patch: portion must be in (0, 1]");
}

std::size_t PatchedWindow::patched_cells() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

Window generate_anomaly(const ModelParams& model, const Window& x, Rng& rng) {
  const auto lat = encode(model, x);
  auto out = decode(model, perturb_latent(lat, model.psi(), rng));
  out.origin = x.origin;
  return out;
}

PatchedWindow deviation_patch(const Window& x, const Window& generated, double tau,
                              bool per_dimension) {
  require_same_shape(x, generated, "deviation_patch");
  if (!(tau >= 0.0)) throw ParameterError("deviation_patch: tau must be nonnegative");
  PatchedWindow p{x, std::vector<std::uint8_t>(x.size(), 0), x.origin};
  for (std::size_t d = 0; d < x.dims; ++d) {
    double lo = x.at(0, d), hi = x.at(0, d);
    for (std::size_t t = 1; t < x.length; ++t) {
      lo = std::min(lo, x.at(t, d));
      hi = std::max(hi, x.at(t, d));
    }
    const double threshold = tau * (hi - lo);
    if (per_dimension) {
      double dev = 0.0;
      for (std::size_t t = 0; t < x.length; ++t) {
        const double e = x.at(t, d) - generated.at(t, d);
        dev += e * e;
      }
      dev /= static_cast<double>(x.length);
      if (dev > threshold) {
        for (std::size_t t = 0; t < x.length; ++t) {
          p.data.at(t, d) = generated.at(t, d);
          p.mask[t * x.dims + d] = 1;
        }
      }
      continue;
    }
    for (std::size_t t = 0; t < x.length; ++t) {
      const double e = x.at(t, d) - generated.at(t, d);
      if (e * e > threshold) {
        p.data.at(t, d) = generated.at(t, d);
        p.mask[t * x.dims + d] = 1;
      }
    }
  }
  return p;
}

PatchedWindow length_patch(const Window& x, const Window& generated, double portion, Rng& rng) {
  require_same_shape(x, generated, "length_patch");
  if (!(portion > 0.0 && portion <= 1.0)) throw ParameterError("length_patch: portion must be in (0, 1]");
  PatchedWindow p{x, std::vector<std::uint8_t>(x.size(), 0), x.origin};
  const auto span = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(portion * static_cast<double>(x.length))), 1, x.length);
  const auto start = std::uniform_int_distribution<std::size_t>(0, x.length - span)(rng);
  for (std::size_t t = start; t < start + span; ++t)
    for (std::size_t d = 0; d < x.dims; ++d) {
      p.data.at(t, d) = generated.at(t, d);
      p.mask[t * x.dims + d] = 1;
    }
  return p;
}

std::vector<PatchedWindow> batch_inject(const ModelParams& model, std::span<const Window> windows,
                                        const PatchConfig& config) {
  config.validate();
  for (const auto& x : windows) {
    if (static_cast<int>(x.length) != model.arch.window_length ||
        static_cast<int>(x.dims) != model.arch.dims)
      throw ShapeError("batch_inject: window shape does not match the model");
  }
  std::vector<PatchedWindow> out(windows.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(windows.size()); ++i) {
    Rng rng = derive_rng(config.seed, static_cast<std::uint64_t>(i));
    const Window& x = windows[i];
    Window gen = generate_anomaly(model, x, rng);
    switch (config.mode) {
      case PatchMode::deviation:
        out[i] = deviation_patch(x, gen, config.tau, config.per_dimension);
        break;
      case PatchMode::length:
        out[i] = length_patch(x, gen, config.portion, rng);
        break;
      case PatchMode::none:
        out[i] = PatchedWindow{gen, std::vector<std::uint8_t>(x.size(), 1), x.origin};
        break;
    }
    out[i].data.label = true;
  }
  return out;
}

std::string to_string(PatchMode m) {
  switch (m) {
    case PatchMode::deviation: return "deviation";
    case PatchMode::length: return "length";
    case PatchMode::none: return "none";
  }
  return "deviation";
}

PatchMode parse_patch_mode(const std::string& s) {
  if (s == "deviation") return PatchMode::deviation;
  if (s == "length") return PatchMode::length;
  if (s == "none") return PatchMode::none;
  throw ParameterError("unknown patch mode '" + s + "'");
}

}  // namespace genias
