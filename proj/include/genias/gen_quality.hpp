#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "genias/nn.hpp"
#include "genias/rng.hpp"
#include "genias/tensor.hpp"

namespace genias {

struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Embedding = std::vector<double>;

inline constexpr int kEmbeddingDim = 128;

/// One-class (Deep SVDD style) embedder: two causal conv blocks, global average pooling
/// and a bias-free linear map to 128 dims, trained to pull embeddings toward a center.
struct EmbeddingModel {
  int dims = 0;
  nn::Conv1d conv0, conv1;
  nn::Linear head;
  std::vector<double> center;
  int epochs = 0;
  std::uint64_t seed = 0;
  bool collapsed = false;
  double initial_distance = 0.0;  // mean squared distance to center before training
  double final_distance = 0.0;

  std::vector<Embedding> embed(std::span<const Window> windows) const;
};

struct EmbedderOptions {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-3;
};

EmbeddingModel train_embedder(std::span<const Window> windows, std::uint64_t seed,
                              const EmbedderOptions& options = {});

/// Mean squared distance of embeddings to the model center.
double mean_center_distance(const EmbeddingModel& model, std::span<const Window> windows);

/// 1 / (1 + mean over real points of the Euclidean distance to the nearest generated point).
double arp(std::span<const Embedding> real, std::span<const Embedding> generated);

struct Partition {
  std::vector<Embedding> centroids;

  /// Nearest centroid, ties to the lowest index.
  std::size_t assign(const Embedding& v) const;
  std::size_t size() const { return centroids.size(); }
};

/// Seeded Lloyd clustering of `all` into k regions.
Partition build_partition(std::span<const Embedding> all, std::size_t k, std::uint64_t seed,
                          int max_iterations = 100);

/// min(32, n / 10), but at least 2.
std::size_t default_partition_k(std::size_t n);

/// Shannon entropy (nats) of region proportions, divided by log K.
double edi(std::span<const Embedding> generated, const Partition& partition);

/// Entropy in nats of a proportion vector, 0 log 0 = 0.
double shannon_entropy(std::span<const double> proportions);

}  // namespace genias
