#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "genias/model.hpp"
#include "genias/tensor.hpp"

namespace genias::theory {

/// Per-dimension KL(N(mu, s2) || N(0, sp2)) = 1/2 (s2/sp2 + mu^2/sp2 - 1 - log(s2/sp2)).
double kl_gaussian(double mu, double sigma_sq, double sigma_prior_sq);

/// x - 1 - log x for x > 0.
double f_mono(double x);

struct VarianceOptimum {
  double argmin_sigma_sq = 0.0;
  double residual = 0.0;
};

/// Golden-section minimization of 1/2 (s2/sp2 - log(s2/sp2)) over s2.
VarianceOptimum verify_variance_optimum(double sigma_prior_sq);

/// Prior-compactness scenario: perturbation scale, normal posterior variance, and the
/// compact prior standard deviation (0 < sigma_prior <= 1).
struct KLScenario {
  double psi = 2.0;
  double sigma_normal_sq = 1.0;
  double sigma_prior = 0.5;
};

enum class VarianceInflation {
  linear,   // sigma_anom^2 = psi * sigma_normal^2
  squared,  // sigma_anom^2 = psi^2 * sigma_normal^2 (matches scaling the std by psi)
};

struct KLSeparation {
  double kl_compact = 0.0;
  double kl_unit = 0.0;
  bool holds = false;
  /// Both KL arguments exceed 1 and sigma_prior < 1, where f_mono is increasing.
  bool in_domain = false;
};

/// Compares 1/2 f(v / sigma_prior^2) against 1/2 f(v) with v the inflated variance and
/// sigma_normal^2 held fixed across both priors.
KLSeparation verify_kl_separation(const KLScenario& s,
                               VarianceInflation inflation = VarianceInflation::linear);

using BatchDecoder =
    std::function<std::vector<std::vector<double>>(const std::vector<std::vector<double>>&)>;

/// trace(J^T J diag(sigma_sq)) with J the central-difference Jacobian of `decoder` at mu.
double jacobian_trace_term(const BatchDecoder& decoder, std::span<const double> mu,
                           std::span<const double> sigma_sq, double epsilon_fd = 1e-3);

/// Same, for the model decoder at the posterior of X.
double jacobian_trace_term(const ModelParams& model, const Window& x, double epsilon_fd = 1e-3);

struct Check {
  std::string name;
  std::vector<std::pair<std::string, double>> inputs;
  std::vector<std::pair<std::string, double>> values;
  bool holds = false;
  double tolerance = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 7;
  int optimum_priors = 20;
  double optimum_tolerance = 1e-6;
  double jacobian_tolerance = 1e-6;
  VarianceInflation inflation = VarianceInflation::linear;
};

/// Variance-optimum residuals on random priors, the KL separation grid (in-domain points only),
/// f_mono monotonicity, KL nonnegativity and the linear-decoder Jacobian oracle.
std::vector<Check> run_verification(const VerifyOptions& options);

}  // namespace genias::theory
