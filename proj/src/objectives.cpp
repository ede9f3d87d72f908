#include "genias/objectives.hpp"

#include <cmath>

#include "genias/data.hpp"

namespace genias {

namespace {

void check_batch(std::span<const Window> a, std::span<const Window> b, const char* what) {
  if (a.empty()) throw ValidationError(std::string(what) + ": empty batch");
  if (a.size() != b.size()) throw ShapeError(std::string(what) + ": batch size mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) require_same_shape(a[i], b[i], what);
}

std::vector<Window> zeros_like(std::span<const Window> ws) {
  std::vector<Window> out;
  out.reserve(ws.size());
  for (const auto& w : ws) out.emplace_back(w.length, w.dims);
  return out;
}

// Adds scale * d mse(x, y) / dy into g.
void add_mse_grad(const Window& x, const Window& y, double scale, Window& g) {
  const double k = 2.0 * scale / static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g.values[i] += k * (y.values[i] - x.values[i]);
}

}  // namespace

double mse_distance(const Window& x, const Window& y) {
  require_same_shape(x, y, "mse_distance");
  if (x.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.values[i] - y.values[i];
    s += d * d;
  }
  return s / static_cast<double>(x.size());
}

double recon_loss(std::span<const Window> x, std::span<const Window> recon,
                  std::vector<Window>* g_recon) {
  check_batch(x, recon, "recon_loss");
  const double inv_b = 1.0 / static_cast<double>(x.size());
  if (g_recon) *g_recon = zeros_like(recon);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    total += mse_distance(x[i], recon[i]);
    if (g_recon) add_mse_grad(x[i], recon[i], inv_b, (*g_recon)[i]);
  }
  return total * inv_b;
}

double perturb_loss(std::span<const Window> x, std::span<const Window> recon,
                    std::span<const Window> anomalous, double delta_min, double delta_max,
                    std::vector<Window>* g_recon, std::vector<Window>* g_anomalous) {
  if (!(delta_min > 0.0 && delta_min < delta_max))
    throw ParameterError("perturb_loss: margins must satisfy 0 < delta_min < delta_max");
  check_batch(x, recon, "perturb_loss");
  check_batch(x, anomalous, "perturb_loss");
  const double inv_b = 1.0 / static_cast<double>(x.size());
  if (g_recon) *g_recon = zeros_like(recon);
  if (g_anomalous) *g_anomalous = zeros_like(anomalous);
  double triplet = 0.0, cap = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d_rec = mse_distance(x[i], recon[i]);
    const double d_anom = mse_distance(x[i], anomalous[i]);
    const double h1 = d_rec - d_anom + delta_min;
    const double h2 = d_anom - delta_max;
    if (h1 > 0.0) {
      triplet += h1;
      if (g_recon) add_mse_grad(x[i], recon[i], inv_b, (*g_recon)[i]);
      if (g_anomalous) add_mse_grad(x[i], anomalous[i], -inv_b, (*g_anomalous)[i]);
    }
    if (h2 > 0.0) {
      cap += h2;
      if (g_anomalous) add_mse_grad(x[i], anomalous[i], inv_b, (*g_anomalous)[i]);
    }
  }
  return triplet * inv_b + cap * inv_b;
}

double zero_perturb_loss(std::span<const Window> x, std::span<const Window> anomalous,
                         std::vector<Window>* g_anomalous) {
  if (x.size() != anomalous.size()) throw ShapeError("zero_perturb_loss: batch size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) require_same_shape(x[i], anomalous[i], "zero_perturb_loss");
  if (g_anomalous) *g_anomalous = zeros_like(anomalous);

  std::vector<std::pair<std::size_t, std::set<std::size_t>>> with_zero;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto z = zero_dims(x[i]);
    if (!z.empty()) with_zero.emplace_back(i, std::move(z));
  }
  if (with_zero.empty()) return 0.0;

  const double inv_n = 1.0 / static_cast<double>(with_zero.size());
  double total = 0.0;
  for (const auto& [i, dims] : with_zero) {
    const Window& xi = x[i];
    const Window& ai = anomalous[i];
    const double inv_cells = 1.0 / static_cast<double>(xi.length * dims.size());
    double s = 0.0;
    for (std::size_t t = 0; t < xi.length; ++t)
      for (std::size_t d : dims) {
        const double dev = ai.at(t, d) - xi.at(t, d);
        const double q = dev * dev + 1.0;
        s += 1.0 / q;
        if (g_anomalous) (*g_anomalous)[i].at(t, d) += -inv_n * inv_cells * 2.0 * dev / (q * q);
      }
    total += s * inv_cells;
  }
  return total * inv_n;
}

double enhanced_kl_loss(std::span<const LatentGaussian> latents, double sigma_prior,
                        std::vector<LatentGrad>* grads) {
  if (!(sigma_prior > 0.0)) throw ParameterError("enhanced_kl_loss: sigma_prior must be positive");
  if (latents.empty()) return 0.0;
  const double inv_b = 1.0 / static_cast<double>(latents.size());
  const double sp2 = sigma_prior * sigma_prior;
  const double log_sp = std::log(sigma_prior);
  if (grads) grads->assign(latents.size(), {});
  double total = 0.0;
  for (std::size_t i = 0; i < latents.size(); ++i) {
    const auto& l = latents[i];
    double bracket = 0.0;
    for (std::size_t j = 0; j < l.mu.size(); ++j) {
      const double s2 = l.sigma[j] * l.sigma[j];
      bracket += 1.0 + std::log(s2) - l.mu[j] * l.mu[j] - s2 / sp2 + 2.0 * log_sp;
    }
    total += -0.5 * bracket;
    if (grads) {
      auto& g = (*grads)[i];
      g.mu.resize(l.mu.size());
      g.sigma.resize(l.mu.size());
      for (std::size_t j = 0; j < l.mu.size(); ++j) {
        g.mu[j] = inv_b * l.mu[j];
        g.sigma[j] = inv_b * (l.sigma[j] / sp2 - 1.0 / l.sigma[j]);
      }
    }
  }
  return total * inv_b;
}

double exact_kl_loss(std::span<const LatentGaussian> latents, double sigma_prior,
                     std::vector<LatentGrad>* grads) {
  if (!(sigma_prior > 0.0)) throw ParameterError("exact_kl_loss: sigma_prior must be positive");
  if (latents.empty()) return 0.0;
  const double inv_b = 1.0 / static_cast<double>(latents.size());
  const double sp2 = sigma_prior * sigma_prior;
  if (grads) grads->assign(latents.size(), {});
  double total = 0.0;
  for (std::size_t i = 0; i < latents.size(); ++i) {
    const auto& l = latents[i];
    for (std::size_t j = 0; j < l.mu.size(); ++j) {
      const double r = l.sigma[j] * l.sigma[j] / sp2;
      total += 0.5 * (r + l.mu[j] * l.mu[j] / sp2 - 1.0 - std::log(r));
    }
    if (grads) {
      auto& g = (*grads)[i];
      g.mu.resize(l.mu.size());
      g.sigma.resize(l.mu.size());
      for (std::size_t j = 0; j < l.mu.size(); ++j) {
        g.mu[j] = inv_b * l.mu[j] / sp2;
        g.sigma[j] = inv_b * (l.sigma[j] / sp2 - 1.0 / l.sigma[j]);
      }
    }
  }
  return total * inv_b;
}

LossBreakdown total_loss(LossBreakdown c, const GenConfig& config) {
  c.total = config.alpha * c.recon + config.beta * c.perturb + config.gamma * c.zero_perturb +
            config.zeta * c.en_kl;
  return c;
}

LossBreakdown evaluate_objective(std::span<const Window> x, std::span<const Window> recon,
                                 std::span<const Window> anomalous,
                                 std::span<const LatentGaussian> latents, const GenConfig& config,
                                 ObjectiveGradients* grads) {
  LossBreakdown b;
  std::vector<Window> g_rec, g_p_rec, g_p_anom, g_z_anom;
  std::vector<LatentGrad> g_kl;
  const bool want = grads != nullptr;
  b.recon = recon_loss(x, recon, want ? &g_rec : nullptr);
  b.perturb = perturb_loss(x, recon, anomalous, config.delta_min, config.delta_max,
                           want ? &g_p_rec : nullptr, want ? &g_p_anom : nullptr);
  b.zero_perturb = zero_perturb_loss(x, anomalous, want ? &g_z_anom : nullptr);
  b.en_kl = config.kl_mode == KlMode::enhanced
                ? enhanced_kl_loss(latents, config.sigma_prior, want ? &g_kl : nullptr)
                : exact_kl_loss(latents, config.sigma_prior, want ? &g_kl : nullptr);
  b = total_loss(b, config);
  if (!want) return b;

  grads->recon = std::move(g_rec);
  grads->anomalous = std::move(g_p_anom);
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto& gr = grads->recon[i].values;
    auto& ga = grads->anomalous[i].values;
    for (std::size_t k = 0; k < gr.size(); ++k) {
      gr[k] = config.alpha * gr[k] + config.beta * g_p_rec[i].values[k];
      ga[k] = config.beta * ga[k] + config.gamma * g_z_anom[i].values[k];
    }
  }
  grads->latent = std::move(g_kl);
  for (auto& g : grads->latent) {
    for (auto& v : g.mu) v *= config.zeta;
    for (auto& v : g.sigma) v *= config.zeta;
  }
  return b;
}

std::string first_nonfinite(const LossBreakdown& b) {
  if (!std::isfinite(b.recon)) return "recon";
  if (!std::isfinite(b.perturb)) return "perturb";
  if (!std::isfinite(b.zero_perturb)) return "zero_perturb";
  if (!std::isfinite(b.en_kl)) return "en_kl";
  if (!std::isfinite(b.total)) return "total";
  return {};
}

}  // namespace genias
