#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "genias/config.hpp"
#include "genias/nn.hpp"
#include "genias/rng.hpp"
#include "genias/tensor.hpp"

namespace genias {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Diagonal Gaussian posterior q(z | X).
struct LatentGaussian {
  std::vector<double> mu;
  std::vector<double> sigma;
};

inline constexpr double kSigmaFloor = 1e-4;

/// Learned inflation of the latent standard deviation. Stored unconstrained as
/// `raw`; the effective scale is 1 + softplus(raw) > 1. Size 1 (scalar) or L.
struct PerturbationScale {
  std::vector<double> raw;

  static PerturbationScale from_psi(std::vector<double> psi);
  double at(std::size_t j) const;
  std::vector<double> values(std::size_t latent) const;
};

/// Encoder, decoder and perturbation scale of the TCN-VAE.
struct ModelParams {
  Architecture arch;
  std::vector<nn::Conv1d> encoder;
  nn::Linear mu_head;
  nn::Linear logvar_head;
  nn::Linear decoder_in;
  std::vector<nn::TConv1d> decoder;
  nn::Parameter psi_raw;

  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;
  PerturbationScale psi() const { return {psi_raw.value}; }
  void zero_grad();
};

ModelParams init_model(const GenConfig& config, std::uint64_t seed);

LatentGaussian encode(const ModelParams& model, const Window& x);
std::vector<LatentGaussian> encode(const ModelParams& model, std::span<const Window> xs);

/// z = mu + sigma * eps, eps ~ N(0, I).
std::vector<double> sample_latent(const LatentGaussian& lat, Rng& rng);
/// z~ = mu + psi * (sigma * eps).
std::vector<double> perturb_latent(const LatentGaussian& lat, const PerturbationScale& psi, Rng& rng);
/// Same as perturb_latent with a caller-supplied eps.
std::vector<double> perturb_latent(const LatentGaussian& lat, std::span<const double> psi,
                                   std::span<const double> eps);

Window decode(const ModelParams& model, std::span<const double> z);
std::vector<Window> decode(const ModelParams& model, const std::vector<std::vector<double>>& zs);

struct ForwardResult {
  std::vector<Window> recon;
  std::vector<Window> anomalous;
  std::vector<LatentGaussian> latents;
};

/// Inference-mode pass: one encode, then decode a sampled and a perturbed latent per window.
ForwardResult forward(const ModelParams& model, std::span<const Window> xs, Rng& rng);

// Training pass with the activations needed for backprop.

struct EncoderTape {
  Tensor3 input;
  std::vector<Tensor3> pre;  // conv outputs before ReLU
  std::vector<nn::DropoutMask> masks;
  std::vector<Tensor3> out;  // block outputs after ReLU and dropout
  Tensor3 mu, logvar;
};

struct DecoderTape {
  Tensor3 z;
  Tensor3 lin_pre;
  std::vector<Tensor3> in;   // input of each transpose conv
  std::vector<Tensor3> pre;  // output of each transpose conv
  Tensor3 out;               // after sigmoid
};

EncoderTape encode_tape(const ModelParams& model, const Tensor3& x, Rng* dropout_rng);
DecoderTape decode_tape(const ModelParams& model, const Tensor3& z);
/// Accumulates encoder and head gradients.
void encoder_backward(ModelParams& model, const EncoderTape& tape, const Tensor3& g_mu,
                      const Tensor3& g_logvar);
/// Accumulates decoder gradients; returns dL/dz.
Tensor3 decoder_backward(ModelParams& model, const DecoderTape& tape, const Tensor3& g_out);

struct TrainingPass {
  int batch = 0;
  EncoderTape enc;
  DecoderTape dec;  // decodes [z; z~] stacked along the batch axis
  std::vector<double> sigma, eps, eps_tilde;  // (B x L) row-major
  std::vector<double> psi;                    // effective psi per latent dim
  std::vector<Window> recon, anomalous;
  std::vector<LatentGaussian> latents;
};

/// `training` enables dropout. RNG draws: dropout masks, then eps, then eps~.
TrainingPass forward_train(const ModelParams& model, std::span<const Window> xs, Rng& rng,
                           bool training);

/// Gradient of the objective with respect to each latent's mu and sigma.
struct LatentGrad {
  std::vector<double> mu;
  std::vector<double> sigma;
};

/// Backpropagates output and latent gradients through the pass into model grads.
void backward_train(ModelParams& model, const TrainingPass& pass,
                    std::span<const Window> g_recon, std::span<const Window> g_anomalous,
                    std::span<const LatentGrad> g_latent);

void save_checkpoint(const ModelParams& model, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);
std::vector<char> serialize_checkpoint(const ModelParams& model);
ModelParams deserialize_checkpoint(std::span<const char> bytes);

}  // namespace genias
