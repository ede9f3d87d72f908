#include "genias/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "genias/data.hpp"
#include "genias/rng.hpp"

namespace genias::theory {

double kl_gaussian(double mu, double sigma_sq, double sigma_prior_sq) {
  if (!(sigma_sq > 0.0) || !(sigma_prior_sq > 0.0))
    throw ParameterError("kl_gaussian: variances must be positive");
  const double r = sigma_sq / sigma_prior_sq;
  return 0.5 * (r + mu * mu / sigma_prior_sq - 1.0 - std::log(r));
}

double f_mono(double x) {
  if (!(x > 0.0)) throw ParameterError("f_mono: argument must be positive");
  return x - 1.0 - std::log(x);
}

VarianceOptimum verify_variance_optimum(double sigma_prior_sq) {
  if (!(sigma_prior_sq > 0.0)) throw ParameterError("verify_variance_optimum: prior variance must be positive");
  const auto objective = [&](double s2) {
    const double r = s2 / sigma_prior_sq;
    return 0.5 * (r - std::log(r));
  };
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = sigma_prior_sq * 1e-3;
  double b = sigma_prior_sq * 10.0;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = objective(c), fd = objective(d);
  for (int it = 0; it < 500 && (b - a) > 1e-12 * sigma_prior_sq; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = objective(d);
    }
  }
  const double argmin = 0.5 * (a + b);
  return {argmin, std::abs(argmin - sigma_prior_sq)};
}

KLSeparation verify_kl_separation(const KLScenario& s, VarianceInflation inflation) {
  if (!(s.psi > 1.0)) throw ParameterError("verify_kl_separation: psi must exceed 1");
  if (!(s.sigma_normal_sq > 0.0)) throw ParameterError("verify_kl_separation: variance must be positive");
  if (!(s.sigma_prior > 0.0 && s.sigma_prior <= 1.0))
    throw ParameterError("verify_kl_separation: sigma_prior must be in (0, 1]");
  const double scale = inflation == VarianceInflation::linear ? s.psi : s.psi * s.psi;
  const double v = scale * s.sigma_normal_sq;
  const double x_compact = v / (s.sigma_prior * s.sigma_prior);
  KLSeparation r;
  r.kl_compact = 0.5 * f_mono(x_compact);
  r.kl_unit = 0.5 * f_mono(v);
  r.holds = r.kl_compact > r.kl_unit;
  r.in_domain = v > 1.0 && x_compact > 1.0 && s.sigma_prior < 1.0;
  return r;
}

double jacobian_trace_term(const BatchDecoder& decoder, std::span<const double> mu,
                           std::span<const double> sigma_sq, double epsilon_fd) {
  if (!(epsilon_fd > 0.0)) throw ParameterError("jacobian_trace_term: step must be positive");
  if (mu.size() != sigma_sq.size()) throw ShapeError("jacobian_trace_term: mu/sigma size mismatch");
  const std::size_t L = mu.size();
  std::vector<std::vector<double>> probes;
  probes.reserve(2 * L);
  for (std::size_t j = 0; j < L; ++j) {
    std::vector<double> plus(mu.begin(), mu.end()), minus(mu.begin(), mu.end());
    plus[j] += epsilon_fd;
    minus[j] -= epsilon_fd;
    probes.push_back(std::move(plus));
    probes.push_back(std::move(minus));
  }
  const auto out = decoder(probes);
  double trace = 0.0;
  for (std::size_t j = 0; j < L; ++j) {
    const auto& p = out[2 * j];
    const auto& m = out[2 * j + 1];
    double col = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double dj = (p[k] - m[k]) / (2.0 * epsilon_fd);
      col += dj * dj;
    }
    trace += sigma_sq[j] * col;
  }
  return trace;
}

double jacobian_trace_term(const ModelParams& model, const Window& x, double epsilon_fd) {
  const auto lat = encode(model, x);
  std::vector<double> var(lat.sigma.size());
  for (std::size_t j = 0; j < var.size(); ++j) var[j] = lat.sigma[j] * lat.sigma[j];
  BatchDecoder dec = [&model](const std::vector<std::vector<double>>& zs) {
    auto ws = decode(model, zs);
    std::vector<std::vector<double>> out;
    out.reserve(ws.size());
    for (auto& w : ws) out.push_back(std::move(w.values));
    return out;
  };
  return jacobian_trace_term(dec, lat.mu, var, epsilon_fd);
}

std::vector<Check> run_verification(const VerifyOptions& options) {
  std::vector<Check> checks;
  Rng rng(options.seed);

  std::uniform_real_distribution<double> prior_dist(0.01, 4.0);
  for (int i = 0; i < options.optimum_priors; ++i) {
    const double sp2 = prior_dist(rng);
    const auto r = verify_variance_optimum(sp2);
    checks.push_back({"optimal_variance",
                      {{"sigma_prior_sq", sp2}},
                      {{"argmin_sigma_sq", r.argmin_sigma_sq}, {"residual", r.residual}},
                      r.residual <= options.optimum_tolerance,
                      options.optimum_tolerance});
  }

  for (double alpha : {0.25, 0.5, 0.75})
    for (double psi : {1.5, 2.0, 4.0})
      for (double sn2 : {0.5, 1.0, 2.0}) {
        const auto r = verify_kl_separation({psi, sn2, alpha}, options.inflation);
        if (!r.in_domain) continue;
        checks.push_back({"kl_separation",
                          {{"alpha", alpha}, {"psi", psi}, {"sigma_normal_sq", sn2}},
                          {{"kl_compact", r.kl_compact}, {"kl_unit", r.kl_unit}},
                          r.holds,
                          0.0});
      }

  {
    bool mono = true;
    double prev = f_mono(1.0);
    for (int i = 1; i <= 1000; ++i) {
      const double cur = f_mono(1.0 + 0.01 * i);
      mono = mono && cur > prev;
      prev = cur;
    }
    checks.push_back({"f_mono_increasing_above_one", {{"x_max", 11.0}}, {{"f_at_x_max", prev}}, mono, 0.0});
  }

  {
    bool nonneg = true;
    double min_kl = std::numeric_limits<double>::infinity();
    for (double mu : {-1.0, -0.1, 0.0, 0.5, 2.0})
      for (double s2 : {0.01, 0.25, 1.0, 3.0})
        for (double p2 : {0.04, 0.25, 1.0}) {
          const double k = kl_gaussian(mu, s2, p2);
          min_kl = std::min(min_kl, k);
          nonneg = nonneg && k >= 0.0;
        }
    checks.push_back({"kl_nonnegative_grid", {}, {{"min_kl", min_kl}}, nonneg, 0.0});
  }

  {
    // Linear decoder g(z) = A z: trace(A^T A diag(s2)) in closed form.
    constexpr std::size_t kOut = 6, kLat = 4;
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> A(kOut * kLat), mu(kLat), s2(kLat);
    for (auto& a : A) a = nd(rng);
    for (auto& m : mu) m = nd(rng);
    for (auto& s : s2) s = 0.1 + std::abs(nd(rng));
    BatchDecoder lin = [&](const std::vector<std::vector<double>>& zs) {
      std::vector<std::vector<double>> out;
      for (const auto& z : zs) {
        std::vector<double> y(kOut, 0.0);
        for (std::size_t r = 0; r < kOut; ++r)
          for (std::size_t c = 0; c < kLat; ++c) y[r] += A[r * kLat + c] * z[c];
        out.push_back(std::move(y));
      }
      return out;
    };
    double analytic = 0.0;
    for (std::size_t c = 0; c < kLat; ++c) {
      double col = 0.0;
      for (std::size_t r = 0; r < kOut; ++r) col += A[r * kLat + c] * A[r * kLat + c];
      analytic += s2[c] * col;
    }
    const double fd = jacobian_trace_term(lin, mu, s2, 1e-3);
    const double err = std::abs(fd - analytic);
    checks.push_back({"linear_decoder_trace",
                      {},
                      {{"finite_difference", fd}, {"analytic", analytic}, {"abs_error", err}},
                      err <= options.jacobian_tolerance,
                      options.jacobian_tolerance});
  }
  return checks;
}

}  // namespace genias::theory
