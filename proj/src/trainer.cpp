#include "genias/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "genias/data.hpp"

namespace genias {

std::string to_json_line(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["lr"] = r.lr;
  j["recon"] = r.loss.recon;
  j["perturb"] = r.loss.perturb;
  j["zero_perturb"] = r.loss.zero_perturb;
  j["en_kl"] = r.loss.en_kl;
  j["total"] = r.loss.total;
  j["psi"] = r.psi;
  return j.dump();
}

EpochRecord parse_json_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  EpochRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.lr = j.at("lr").get<double>();
  r.loss.recon = j.at("recon").get<double>();
  r.loss.perturb = j.at("perturb").get<double>();
  r.loss.zero_perturb = j.at("zero_perturb").get<double>();
  r.loss.en_kl = j.at("en_kl").get<double>();
  r.loss.total = j.at("total").get<double>();
  r.psi = j.at("psi").get<double>();
  return r;
}

double lr_schedule(int /*epoch*/, int plateau_counter, double current_lr, int plateau_epochs,
                   double min_lr) {
  if (!(current_lr > 0.0)) throw ParameterError("lr_schedule: learning rate must be positive");
  if (plateau_counter < plateau_epochs) return current_lr;
  return std::max(current_lr * 0.5, min_lr);
}

bool early_stop(std::span<const EpochRecord> history, int patience, double min_improvement) {
  if (history.empty()) return false;
  double best = history.front().loss.total;
  std::size_t best_at = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i].loss.total < best - min_improvement) {
      best = history[i].loss.total;
      best_at = i;
    }
  }
  return history.size() - 1 - best_at >= static_cast<std::size_t>(patience);
}

LossBreakdown accumulate_gradients(ModelParams& model, std::span<const Window> batch,
                                   const GenConfig& config, Rng& rng, bool training) {
  auto pass = forward_train(model, batch, rng, training);
  ObjectiveGradients g;
  auto loss = evaluate_objective(batch, pass.recon, pass.anomalous, pass.latents, config, &g);
  backward_train(model, pass, g.recon, g.anomalous, g.latent);
  return loss;
}

namespace {

struct ThreadGuard {
  int saved;
  explicit ThreadGuard(bool serial) : saved(kernel_threads()) {
    if (serial) set_kernel_threads(1);
  }
  ~ThreadGuard() { set_kernel_threads(saved); }
};

double mean_psi(const ModelParams& m) {
  auto v = m.psi().values(m.psi_raw.value.size());
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TrainResult train(std::span<const Window> windows, const GenConfig& config, std::uint64_t seed,
                  const TrainOptions& options) {
  config.validate();
  if (windows.empty()) throw ValidationError("train: empty dataset");
  ThreadGuard guard(options.deterministic);

  TrainResult result{init_model(config, seed), {}};
  ModelParams& model = result.model;
  auto params = model.parameters();
  nn::Adam adam(params, {config.learning_rate});
  Rng rng = derive_rng(seed, 1);

  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::min<std::size_t>(config.batch_size, windows.size());

  double best = std::numeric_limits<double>::infinity();
  int plateau = 0;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    LossBreakdown sum;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::vector<Window> xs;
      xs.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) xs.push_back(windows[order[k]]);

      model.zero_grad();
      auto loss = accumulate_gradients(model, xs, config, rng, true);
      if (auto bad = first_nonfinite(loss); !bad.empty()) throw TrainingAborted(bad, epoch);
      nn::clip_grad_norm(params, config.grad_clip);
      adam.step(params);

      const auto w = static_cast<double>(end - start);
      sum.recon += w * loss.recon;
      sum.perturb += w * loss.perturb;
      sum.zero_perturb += w * loss.zero_perturb;
      sum.en_kl += w * loss.en_kl;
    }
    const double n = static_cast<double>(windows.size());
    LossBreakdown avg{sum.recon / n, sum.perturb / n, sum.zero_perturb / n, sum.en_kl / n, 0.0};
    avg = total_loss(avg, config);

    EpochRecord rec{epoch, adam.lr(), avg, mean_psi(model)};
    result.history.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec, model);

    if (avg.total < best - config.min_improvement) {
      best = avg.total;
      plateau = 0;
    } else {
      ++plateau;
    }
    const double next = lr_schedule(epoch, plateau, adam.lr(), config.plateau_epochs, config.min_lr);
    if (next != adam.lr()) {
      adam.set_lr(next);
      plateau = 0;
    }
    if (early_stop(result.history, config.patience, config.min_improvement)) break;
  }
  return result;
}

}  // namespace genias
