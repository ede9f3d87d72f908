#pragma once

#include <span>
#include <string>
#include <vector>

#include "genias/config.hpp"
#include "genias/model.hpp"
#include "genias/tensor.hpp"

namespace genias {

/// Mean over all T*D cells of the squared difference.
double mse_distance(const Window& x, const Window& y);

// Each loss takes optional output gradient buffers. When non-null they are resized
// to match and overwritten with dLoss/d(argument).

/// Batch mean of mse_distance(X, X^).
double recon_loss(std::span<const Window> x, std::span<const Window> recon,
                  std::vector<Window>* g_recon = nullptr);

/// Triplet hinge pulling d(X, X~) above d(X, X^) + delta_min, plus a hinge keeping
/// d(X, X~) below delta_max. Both terms are batch means.
double perturb_loss(std::span<const Window> x, std::span<const Window> recon,
                    std::span<const Window> anomalous, double delta_min, double delta_max,
                    std::vector<Window>* g_recon = nullptr,
                    std::vector<Window>* g_anomalous = nullptr);

/// Mean over zero cells of 1 / ((X~ - X)^2 + 1), averaged over windows that have at
/// least one all-zero dimension. Zero when no window has one.
double zero_perturb_loss(std::span<const Window> x, std::span<const Window> anomalous,
                         std::vector<Window>* g_anomalous = nullptr);

/// -1/2 sum_j [1 + log s^2 - mu^2 - s^2/sp^2 + 2 log sp], averaged over the batch.
double enhanced_kl_loss(std::span<const LatentGaussian> latents, double sigma_prior,
                        std::vector<LatentGrad>* grads = nullptr);

/// Closed-form KL(N(mu, s^2) || N(0, sp^2)) summed over dims, averaged over the batch.
double exact_kl_loss(std::span<const LatentGaussian> latents, double sigma_prior,
                     std::vector<LatentGrad>* grads = nullptr);

struct LossBreakdown {
  double recon = 0.0;
  double perturb = 0.0;
  double zero_perturb = 0.0;
  double en_kl = 0.0;
  double total = 0.0;
};

/// Fills `total` from the four components and the config weights.
LossBreakdown total_loss(LossBreakdown components, const GenConfig& config);

struct ObjectiveGradients {
  std::vector<Window> recon;
  std::vector<Window> anomalous;
  std::vector<LatentGrad> latent;
};

/// Evaluates every component and the weighted total on one batch. When `grads` is
/// non-null it receives the gradient of the weighted total.
LossBreakdown evaluate_objective(std::span<const Window> x, std::span<const Window> recon,
                                 std::span<const Window> anomalous,
                                 std::span<const LatentGaussian> latents, const GenConfig& config,
                                 ObjectiveGradients* grads = nullptr);

/// Name of the first non-finite component, or empty.
std::string first_nonfinite(const LossBreakdown& b);

}  // namespace genias
