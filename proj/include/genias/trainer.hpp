#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "genias/config.hpp"
#include "genias/model.hpp"
#include "genias/objectives.hpp"

namespace genias {

/// Raised when a loss component becomes non-finite.
struct TrainingAborted : std::runtime_error {
  std::string component;
  int epoch;
  TrainingAborted(std::string comp, int ep)
      : std::runtime_error("non-finite " + comp + " loss at epoch " + std::to_string(ep)),
        component(std::move(comp)),
        epoch(ep) {}
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  LossBreakdown loss;
  double psi = 0.0;  // mean effective perturbation scale
};

std::string to_json_line(const EpochRecord& r);
EpochRecord parse_json_line(const std::string& line);

struct TrainOptions {
  /// Forces single-threaded kernels so runs are bit-reproducible.
  bool deterministic = true;
  std::function<void(const EpochRecord&, const ModelParams&)> on_epoch;
};

struct TrainResult {
  ModelParams model;
  std::vector<EpochRecord> history;
};

/// Adam over encoder, decoder and psi with shuffled mini-batches, plateau lr halving,
/// global-norm clipping and early stopping. Windows are expected normalized to [0, 1].
TrainResult train(std::span<const Window> windows, const GenConfig& config, std::uint64_t seed,
                  const TrainOptions& options = {});

/// Halves lr once the plateau counter reaches `plateau_epochs`, never below min_lr.
double lr_schedule(int epoch, int plateau_counter, double current_lr, int plateau_epochs = 25,
                   double min_lr = 1e-6);

/// True when the best total has not improved by at least `min_improvement` for
/// `patience` epochs.
bool early_stop(std::span<const EpochRecord> history, int patience = 100,
                double min_improvement = 1e-5);

/// One full forward/backward pass on a batch. Leaves gradients in `model`.
LossBreakdown accumulate_gradients(ModelParams& model, std::span<const Window> batch,
                                   const GenConfig& config, Rng& rng, bool training);

}  // namespace genias
