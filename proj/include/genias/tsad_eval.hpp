#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "genias/gen_quality.hpp"
#include "genias/model.hpp"
#include "genias/nn.hpp"
#include "genias/tensor.hpp"

namespace genias {

struct ScoredWindows {
  std::vector<double> scores;  // higher = more anomalous
  std::vector<std::uint8_t> labels;
};

/// Per-window MSE between X and decode(mu(X)); no sampling.
std::vector<double> recon_score(const ModelParams& model, std::span<const Window> windows);

/// Small convolutional window classifier: two causal conv blocks, concatenated global
/// average and max pooling, linear to one logit.
class ClassifierDetector {
 public:
  ClassifierDetector() = default;
  ClassifierDetector(int dims, std::uint64_t seed);

  /// Probability of anomaly per window, in [0, 1].
  std::vector<double> score(std::span<const Window> windows) const;

  // Training internals, exposed for the trainer below.
  struct Tape {
    Tensor3 x, pre0, act0, pre1, act1, pooled, logit;
    std::vector<int> argmax;
  };
  Tape forward(const Tensor3& x) const;
  void backward(const Tape& tape, const Tensor3& g_logit);
  std::vector<nn::Parameter*> parameters();

 private:
  int dims_ = 0;
  nn::Conv1d conv0_, conv1_;
  nn::Linear head_;
};

struct ClassifierOptions {
  int epochs = 60;
  int batch_size = 32;
  double learning_rate = 1e-3;
};

/// Binary cross-entropy training on normals (label 0) vs generated anomalies (label 1).
ClassifierDetector train_classifier_detector(std::span<const Window> normals,
                                             std::span<const Window> anomalies,
                                             std::uint64_t seed,
                                             const ClassifierOptions& options = {});

struct DetectionMetrics {
  double best_f1 = 0.0;
  double best_threshold = 0.0;
  double aupr = 0.0;
  double auroc = 0.0;
};

/// Best F1 over thresholds between consecutive unique scores (plus +/-inf, predicting
/// anomaly when score > threshold), step-wise average precision, Mann-Whitney AUROC.
DetectionMetrics detection_metrics(const ScoredWindows& scored);

}  // namespace genias
