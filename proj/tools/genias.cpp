#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "genias/data.hpp"
#include "genias/gen_quality.hpp"
#include "genias/injector.hpp"
#include "genias/kernels.hpp"
#include "genias/model.hpp"
#include "genias/theory.hpp"
#include "genias/trainer.hpp"
#include "genias/tsad_eval.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;
using namespace genias;

namespace {

enum ExitCode {
  kOk = 0,
  kConfigError = 2,
  kDataError = 3,
  kTrainingAbort = 4,
  kMismatch = 5,
  kMissing = 6,
  kVerifyFailure = 7,
};

constexpr const char* kOutputEnv = "GENIAS_OUTPUT_ROOT";

struct CliError : std::runtime_error {
  int code;
  CliError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

[[noreturn]] void fail(int code, const std::string& msg) { throw CliError(code, msg); }

// ---------------------------------------------------------------------------
// Configuration

json default_config() {
  const auto g = GenConfig::for_dims(200, 1);
  const auto& a = g.arch;
  return {
      {"seed", 7},
      {"deterministic", false},
      {"data", {{"path", ""}, {"window", a.window_length}, {"stride", nullptr}}},
      {"model",
       {{"latent", nullptr},
        {"channels", a.channels},
        {"dilations", a.dilations},
        {"kernel", a.kernel},
        {"dropout", a.dropout},
        {"vector_psi", a.vector_psi}}},
      {"train",
       {{"alpha", g.alpha},
        {"beta", g.beta},
        {"gamma", nullptr},
        {"zeta", g.zeta},
        {"delta_min", g.delta_min},
        {"delta_max", g.delta_max},
        {"sigma_prior", g.sigma_prior},
        {"kl_mode", to_string(g.kl_mode)},
        {"batch_size", g.batch_size},
        {"learning_rate", g.learning_rate},
        {"max_epochs", g.max_epochs},
        {"patience", g.patience},
        {"plateau_epochs", g.plateau_epochs},
        {"min_improvement", g.min_improvement},
        {"min_lr", g.min_lr},
        {"grad_clip", g.grad_clip},
        {"checkpoint_every", 100}}},
      {"inject",
       {{"checkpoint", ""},
        {"data", ""},
        {"norm_stats", ""},
        {"mode", "deviation"},
        {"tau", 0.2},
        {"portion", 0.5},
        {"per_dimension", false},
        {"stride", nullptr}}},
      {"evaluate",
       {{"checkpoint", ""},
        {"injected", ""},
        {"test", ""},
        {"norm_stats", ""},
        {"stride", 1},
        {"detector", "classifier"},
        {"classifier_epochs", 60},
        {"embedder_epochs", 100},
        {"partition_k", nullptr}}},
      {"verify",
       {{"optimum_priors", 20},
        {"optimum_tolerance", 1e-6},
        {"jacobian_tolerance", 1e-6},
        {"inflation", "linear"}}},
      {"plot",
       {{"kind", "hist"},
        {"checkpoint", ""},
        {"injected", ""},
        {"mask", ""},
        {"windows", json::array({0})},
        {"bins", 40},
        {"log_y", true}}},
      {"sweep", {{"axes", json::object()}, {"steps", json::array({"train", "inject"})}}},
  };
}

bool compatible(const json& base, const json& v) {
  if (base.is_null() || v.is_null()) return true;
  if (base.is_number()) return v.is_number() && (!base.is_number_integer() || v.is_number_integer());
  if (base.is_boolean()) return v.is_boolean();
  if (base.is_string()) return v.is_string();
  if (base.is_array()) return v.is_array();
  if (base.is_object()) return v.is_object();
  return false;
}

// Overlays `user` onto `base`, rejecting keys that `base` does not define. Empty objects in
// `base` are free-form.
void merge_strict(json& base, const json& user, const std::string& where) {
  if (!user.is_object()) fail(kConfigError, "config: " + (where.empty() ? "root" : where) + " must be an object");
  for (const auto& [key, value] : user.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) fail(kConfigError, "config: unknown key '" + path + "'");
    json& slot = base[key];
    if (slot.is_object() && !slot.empty()) {
      merge_strict(slot, value, path);
      continue;
    }
    if (!compatible(slot, value)) fail(kConfigError, "config: wrong type for '" + path + "'");
    slot = value;
  }
}

json::json_pointer pointer_for(const std::string& dotted) {
  std::string p = "/" + dotted;
  for (auto& c : p)
    if (c == '.') c = '/';
  return json::json_pointer(p);
}

template <typename T>
T get(const json& cfg, const char* ptr) {
  try {
    return cfg.at(json::json_pointer(ptr)).get<T>();
  } catch (const json::exception& e) {
    fail(kConfigError, std::string("config: bad value at ") + ptr + ": " + e.what());
  }
}

template <typename T>
std::optional<T> get_opt(const json& cfg, const char* ptr) {
  const auto& v = cfg.at(json::json_pointer(ptr));
  if (v.is_null()) return std::nullopt;
  return get<T>(cfg, ptr);
}

fs::path get_path(const json& cfg, const char* ptr) { return fs::path(get<std::string>(cfg, ptr)); }

json load_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(kConfigError, "config: cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(kConfigError, "config: " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Flags

enum class Kind { real, integer, text, flag };

struct FlagSpec {
  const char* name;
  const char* key;  // dotted config key
  Kind kind;
  const char* help;
};

const std::vector<FlagSpec>& train_flags() {
  static const std::vector<FlagSpec> f{
      {"--data", "data.path", Kind::text, "training series (.csv or .gts)"},
      {"--window", "data.window", Kind::integer, "window length T"},
      {"--stride", "data.stride", Kind::integer, "window stride (default T)"},
      {"--epochs", "train.max_epochs", Kind::integer, "maximum epochs"},
      {"--lr", "train.learning_rate", Kind::real, "learning rate"},
      {"--batch-size", "train.batch_size", Kind::integer, "mini-batch size"},
      {"--latent", "model.latent", Kind::integer, "latent size L"},
      {"--sigma-prior", "train.sigma_prior", Kind::real, "prior standard deviation"},
      {"--delta-min", "train.delta_min", Kind::real, "lower perturbation margin"},
      {"--delta-max", "train.delta_max", Kind::real, "upper perturbation margin"},
      {"--alpha", "train.alpha", Kind::real, "reconstruction weight"},
      {"--beta", "train.beta", Kind::real, "perturbation weight"},
      {"--gamma", "train.gamma", Kind::real, "zero-perturbation weight"},
      {"--zeta", "train.zeta", Kind::real, "KL weight"},
      {"--kl-mode", "train.kl_mode", Kind::text, "enhanced or exact"},
      {"--patience", "train.patience", Kind::integer, "early-stopping patience"},
      {"--dropout", "model.dropout", Kind::real, "encoder dropout rate"},
      {"--vector-psi", "model.vector_psi", Kind::flag, "one perturbation scale per latent dim"},
  };
  return f;
}

const std::vector<FlagSpec>& inject_flags() {
  static const std::vector<FlagSpec> f{
      {"--checkpoint", "inject.checkpoint", Kind::text, "model checkpoint"},
      {"--data", "inject.data", Kind::text, "series to inject into (default data.path)"},
      {"--norm-stats", "inject.norm_stats", Kind::text, "normalizer file"},
      {"--patch-mode", "inject.mode", Kind::text, "deviation, length or none"},
      {"--tau", "inject.tau", Kind::real, "deviation threshold"},
      {"--portion", "inject.portion", Kind::real, "length-patch portion of T"},
      {"--per-dimension", "inject.per_dimension", Kind::flag, "compare whole-dimension deviation"},
      {"--stride", "inject.stride", Kind::integer, "window stride (default T)"},
  };
  return f;
}

const std::vector<FlagSpec>& evaluate_flags() {
  static const std::vector<FlagSpec> f{
      {"--checkpoint", "evaluate.checkpoint", Kind::text, "model checkpoint"},
      {"--data", "data.path", Kind::text, "normal training series"},
      {"--injected", "evaluate.injected", Kind::text, "injected series"},
      {"--test", "evaluate.test", Kind::text, "labeled test series"},
      {"--norm-stats", "evaluate.norm_stats", Kind::text, "normalizer file"},
      {"--eval-stride", "evaluate.stride", Kind::integer, "test window stride"},
      {"--detector", "evaluate.detector", Kind::text, "classifier or recon"},
      {"--classifier-epochs", "evaluate.classifier_epochs", Kind::integer, "classifier epochs"},
      {"--embedder-epochs", "evaluate.embedder_epochs", Kind::integer, "embedder epochs"},
      {"--partition-k", "evaluate.partition_k", Kind::integer, "number of EDI regions"},
  };
  return f;
}

const std::vector<FlagSpec>& verify_flags() {
  static const std::vector<FlagSpec> f{
      {"--priors", "verify.optimum_priors", Kind::integer, "number of random priors"},
      {"--optimum-tolerance", "verify.optimum_tolerance", Kind::real, "argmin residual tolerance"},
      {"--jacobian-tolerance", "verify.jacobian_tolerance", Kind::real, "trace oracle tolerance"},
      {"--inflation", "verify.inflation", Kind::text, "linear or squared"},
  };
  return f;
}

const std::vector<FlagSpec>& plot_flags() {
  static const std::vector<FlagSpec> f{
      {"--kind", "plot.kind", Kind::text, "hist or overlay"},
      {"--checkpoint", "plot.checkpoint", Kind::text, "model checkpoint"},
      {"--data", "data.path", Kind::text, "normal series"},
      {"--injected", "plot.injected", Kind::text, "injected series"},
      {"--mask", "plot.mask", Kind::text, "injection mask"},
      {"--bins", "plot.bins", Kind::integer, "histogram bins"},
  };
  return f;
}

struct FlagValues {
  std::map<std::string, std::string> values;  // key -> raw text
  std::map<std::string, bool> switches;
  std::string config_path;
  std::string out;
  std::optional<long long> seed;
  bool deterministic = false;
};

void add_common(CLI::App* sub, FlagValues& fv) {
  sub->add_option("--config", fv.config_path, "JSON config file");
  sub->add_option("--out", fv.out, std::string("output directory (default $") + kOutputEnv + ")");
  sub->add_option("--seed", fv.seed, "global seed");
  sub->add_flag("--deterministic", fv.deterministic, "single-threaded, bit-reproducible run");
}

void add_specs(CLI::App* sub, FlagValues& fv, const std::vector<FlagSpec>& specs) {
  for (const auto& s : specs) {
    if (sub->get_option_no_throw(s.name)) continue;
    if (s.kind == Kind::flag)
      sub->add_flag(s.name, fv.switches[s.key], s.help);
    else
      sub->add_option(s.name, fv.values[s.key], s.help);
  }
}

json typed_value(const FlagSpec& s, const std::string& raw) {
  try {
    std::size_t used = 0;
    switch (s.kind) {
      case Kind::real: {
        const double v = std::stod(raw, &used);
        if (used != raw.size()) break;
        return v;
      }
      case Kind::integer: {
        const long long v = std::stoll(raw, &used);
        if (used != raw.size()) break;
        return v;
      }
      case Kind::text:
        return raw;
      case Kind::flag:
        return true;
    }
  } catch (const std::exception&) {
  }
  fail(kConfigError, std::string("bad value '") + raw + "' for " + s.name);
}

void apply_flags(json& cfg, const FlagValues& fv, const std::vector<const std::vector<FlagSpec>*>& groups) {
  for (const auto* g : groups)
    for (const auto& s : *g) {
      if (s.kind == Kind::flag) {
        auto it = fv.switches.find(s.key);
        if (it != fv.switches.end() && it->second) cfg[pointer_for(s.key)] = true;
        continue;
      }
      auto it = fv.values.find(s.key);
      if (it != fv.values.end() && !it->second.empty()) cfg[pointer_for(s.key)] = typed_value(s, it->second);
    }
  if (fv.seed) cfg["seed"] = *fv.seed;
  if (fv.deterministic) cfg["deterministic"] = true;
}

fs::path output_root(const FlagValues& fv) {
  if (!fv.out.empty()) return fv.out;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  return "genias_out";
}

// ---------------------------------------------------------------------------
// IO helpers

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) fail(kDataError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_snapshot(const fs::path& out, const std::string& command, const json& cfg) {
  write_json(out / ("resolved_config." + command + ".json"), cfg);
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex64(fnv1a(bytes.data(), bytes.size()));
}

SeriesFormat format_for(const fs::path& p) {
  return p.extension() == ".gts" ? SeriesFormat::binary : SeriesFormat::csv;
}

RawSeries read_series(const fs::path& path, int missing_code) {
  if (path.empty()) fail(missing_code, "no data path given");
  if (!fs::exists(path)) fail(missing_code, "no such file: " + path.string());
  return load_series(path, format_for(path));
}

std::vector<Window> read_windows(const fs::path& path, std::size_t t, std::size_t stride, int missing_code) {
  auto s = read_series(path, missing_code);
  return make_windows(s, t, stride);
}

void save_norm_stats(const NormStats& s, const fs::path& path) {
  write_json(path, {{"min", s.min}, {"max", s.max}});
}

NormStats load_norm_stats(const fs::path& path) {
  if (!fs::exists(path)) fail(kMissing, "missing normalizer file " + path.string());
  std::ifstream in(path);
  try {
    auto j = json::parse(in);
    return {j.at("min").get<std::vector<double>>(), j.at("max").get<std::vector<double>>()};
  } catch (const json::exception& e) {
    fail(kDataError, path.string() + ": " + e.what());
  }
}

struct LoadedModel {
  ModelParams model;
  fs::path path;
  std::string hash;
  NormStats norm;
};

LoadedModel load_model(const fs::path& ckpt, const fs::path& norm_path) {
  if (!fs::exists(ckpt)) fail(kMissing, "missing checkpoint " + ckpt.string());
  LoadedModel m{load_checkpoint(ckpt), ckpt, file_hash(ckpt), {}};
  m.norm = load_norm_stats(norm_path.empty() ? ckpt.parent_path() / "norm_stats.json" : norm_path);
  if (m.norm.min.size() != static_cast<std::size_t>(m.model.arch.dims))
    fail(kMismatch, "normalizer has " + std::to_string(m.norm.min.size()) + " dims, checkpoint has " +
                        std::to_string(m.model.arch.dims));
  return m;
}

void require_match(const LoadedModel& m, const std::vector<Window>& ws, const std::string& what) {
  for (const auto& w : ws)
    if (w.dims != static_cast<std::size_t>(m.model.arch.dims) ||
        w.length != static_cast<std::size_t>(m.model.arch.window_length))
      fail(kMismatch, what + " windows are " + std::to_string(w.length) + "x" + std::to_string(w.dims) +
                          " but the checkpoint expects " + std::to_string(m.model.arch.window_length) + "x" +
                          std::to_string(m.model.arch.dims));
}

fs::path or_default(const fs::path& p, const fs::path& fallback) { return p.empty() ? fallback : p; }

// ---------------------------------------------------------------------------
// Commands

GenConfig gen_config_from(const json& cfg, int window, int dims) {
  auto g = GenConfig::for_dims(window, dims);
  if (auto l = get_opt<int>(cfg, "/model/latent")) g.arch.latent = *l;
  g.arch.channels = get<std::vector<int>>(cfg, "/model/channels");
  g.arch.dilations = get<std::vector<int>>(cfg, "/model/dilations");
  g.arch.kernel = get<int>(cfg, "/model/kernel");
  g.arch.dropout = get<double>(cfg, "/model/dropout");
  g.arch.vector_psi = get<bool>(cfg, "/model/vector_psi");
  g.alpha = get<double>(cfg, "/train/alpha");
  g.beta = get<double>(cfg, "/train/beta");
  if (auto v = get_opt<double>(cfg, "/train/gamma")) g.gamma = *v;
  g.zeta = get<double>(cfg, "/train/zeta");
  g.delta_min = get<double>(cfg, "/train/delta_min");
  g.delta_max = get<double>(cfg, "/train/delta_max");
  g.sigma_prior = get<double>(cfg, "/train/sigma_prior");
  g.kl_mode = parse_kl_mode(get<std::string>(cfg, "/train/kl_mode"));
  g.batch_size = get<int>(cfg, "/train/batch_size");
  g.learning_rate = get<double>(cfg, "/train/learning_rate");
  g.max_epochs = get<int>(cfg, "/train/max_epochs");
  g.patience = get<int>(cfg, "/train/patience");
  g.plateau_epochs = get<int>(cfg, "/train/plateau_epochs");
  g.min_improvement = get<double>(cfg, "/train/min_improvement");
  g.min_lr = get<double>(cfg, "/train/min_lr");
  g.grad_clip = get<double>(cfg, "/train/grad_clip");
  if (g.batch_size <= 0 || g.max_epochs <= 0 || g.patience <= 0 || g.plateau_epochs <= 0)
    fail(kConfigError, "config: batch_size, max_epochs, patience and plateau_epochs must be positive");
  g.validate();
  return g;
}

int cmd_train(json cfg, const fs::path& out) {
  const int window = get<int>(cfg, "/data/window");
  const int stride = get_opt<int>(cfg, "/data/stride").value_or(window);
  cfg["/data/stride"_json_pointer] = stride;
  if (window <= 0 || stride <= 0) fail(kConfigError, "config: window and stride must be positive");
  const int every = get<int>(cfg, "/train/checkpoint_every");
  const auto seed = get<std::uint64_t>(cfg, "/seed");

  auto windows = read_windows(get_path(cfg, "/data/path"), window, stride, kDataError);
  const int dims = static_cast<int>(windows.front().dims);
  const auto g = gen_config_from(cfg, window, dims);
  cfg["/model/latent"_json_pointer] = g.arch.latent;
  cfg["/train/gamma"_json_pointer] = g.gamma;

  fs::create_directories(out);
  write_snapshot(out, "train", cfg);
  const auto norm = fit_normalizer(windows);
  save_norm_stats(norm, out / "norm_stats.json");
  windows = apply_normalizer(windows, norm);

  std::cout << "training on " << windows.size() << " windows (T=" << window << ", D=" << dims
            << ", L=" << g.arch.latent << ")\n";
  std::ofstream log(out / "train_log.jsonl");
  TrainOptions opt;
  opt.deterministic = get<bool>(cfg, "/deterministic");
  opt.on_epoch = [&](const EpochRecord& r, const ModelParams& m) {
    log << to_json_line(r) << '\n';
    if (every > 0 && (r.epoch + 1) % every == 0) {
      fs::create_directories(out / "checkpoints");
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%05d.gvae", r.epoch + 1);
      save_checkpoint(m, out / "checkpoints" / name);
    }
    if (r.epoch % 50 == 0)
      std::cout << "epoch " << r.epoch << " total " << r.loss.total << " psi " << r.psi << '\n';
  };
  TrainResult res;
  try {
    res = train(windows, g, seed, opt);
  } catch (const TrainingAborted& e) {
    log.flush();
    fail(kTrainingAbort, e.what());
  }
  save_checkpoint(res.model, out / "model.gvae");
  const auto& last = res.history.back();
  std::cout << "finished after " << res.history.size() << " epochs, total loss " << last.loss.total
            << ", checkpoint " << (out / "model.gvae").string() << '\n';
  return kOk;
}

struct InjectSummary {
  std::size_t windows = 0;
  std::size_t patched_cells = 0;
};

int cmd_inject(json cfg, const fs::path& out, InjectSummary* summary = nullptr) {
  const auto ckpt = or_default(get_path(cfg, "/inject/checkpoint"), out / "model.gvae");
  cfg["/inject/checkpoint"_json_pointer] = ckpt.string();
  const auto data = or_default(get_path(cfg, "/inject/data"), get_path(cfg, "/data/path"));
  cfg["/inject/data"_json_pointer] = data.string();

  PatchConfig pc;
  pc.mode = parse_patch_mode(get<std::string>(cfg, "/inject/mode"));
  pc.tau = get<double>(cfg, "/inject/tau");
  pc.portion = get<double>(cfg, "/inject/portion");
  pc.per_dimension = get<bool>(cfg, "/inject/per_dimension");
  pc.seed = get<std::uint64_t>(cfg, "/seed");
  pc.validate();

  auto m = load_model(ckpt, get_path(cfg, "/inject/norm_stats"));
  const auto t = static_cast<std::size_t>(m.model.arch.window_length);
  const auto stride = get_opt<int>(cfg, "/inject/stride").value_or(static_cast<int>(t));
  if (stride <= 0) fail(kConfigError, "config: inject.stride must be positive");
  cfg["/inject/stride"_json_pointer] = stride;

  auto windows = read_windows(data, t, static_cast<std::size_t>(stride), kDataError);
  require_match(m, windows, "data");
  fs::create_directories(out);
  write_snapshot(out, "inject", cfg);

  const auto normed = apply_normalizer(windows, m.norm);
  const auto patched = batch_inject(m.model, normed, pc);
  std::vector<Window> injected;
  std::vector<std::uint8_t> mask;
  std::size_t cells = 0;
  for (const auto& p : patched) {
    injected.push_back(p.data);
    mask.insert(mask.end(), p.mask.begin(), p.mask.end());
    cells += p.patched_cells();
  }
  injected = invert_normalizer(injected, m.norm);
  const auto series = windows_to_series(injected, "injected");
  save_series_binary(series, out / "injected.gts");
  save_mask_binary(mask, static_cast<std::uint32_t>(series.steps), static_cast<std::uint32_t>(series.dims),
                   out / "injected.mask");

  json manifest{{"checkpoint_hash", m.hash},
                {"checkpoint", ckpt.string()},
                {"mode", to_string(pc.mode)},
                {"seed", pc.seed},
                {"per_dimension", pc.per_dimension},
                {"source", data.string()},
                {"n_windows", injected.size()},
                {"window", t},
                {"dims", m.model.arch.dims},
                {"patched_cells", cells},
                {"space", "raw"}};
  if (pc.mode == PatchMode::deviation) manifest["tau"] = pc.tau;
  if (pc.mode == PatchMode::length) manifest["portion"] = pc.portion;
  write_json(out / "manifest.json", manifest);
  std::cout << "injected " << injected.size() << " windows, " << cells << " patched cells -> "
            << (out / "injected.gts").string() << '\n';
  if (summary) *summary = {injected.size(), cells};
  return kOk;
}

std::uint64_t embedder_hash(const EmbeddingModel& e) {
  std::uint64_t h = fnv1a(e.center.data(), e.center.size() * sizeof(double));
  for (const auto* p : {&e.conv0.weight, &e.conv0.bias, &e.conv1.weight, &e.conv1.bias, &e.head.weight})
    h = fnv1a(p->value.data(), p->value.size() * sizeof(double), h);
  return h;
}

int cmd_evaluate(json cfg, const fs::path& out, json* reports = nullptr) {
  const auto ckpt = or_default(get_path(cfg, "/evaluate/checkpoint"), out / "model.gvae");
  const auto injected_path = or_default(get_path(cfg, "/evaluate/injected"), out / "injected.gts");
  const auto test_path = get_path(cfg, "/evaluate/test");
  const auto normal_path = get_path(cfg, "/data/path");
  cfg["/evaluate/checkpoint"_json_pointer] = ckpt.string();
  cfg["/evaluate/injected"_json_pointer] = injected_path.string();
  const auto detector = get<std::string>(cfg, "/evaluate/detector");
  if (detector != "classifier" && detector != "recon")
    fail(kConfigError, "config: evaluate.detector must be classifier or recon");
  const auto seed = get<std::uint64_t>(cfg, "/seed");
  const int clf_epochs = get<int>(cfg, "/evaluate/classifier_epochs");
  const int emb_epochs = get<int>(cfg, "/evaluate/embedder_epochs");

  auto m = load_model(ckpt, get_path(cfg, "/evaluate/norm_stats"));
  const auto t = static_cast<std::size_t>(m.model.arch.window_length);
  if (test_path.empty() || !fs::exists(test_path)) fail(kMissing, "missing test series '" + test_path.string() + "'");
  auto test_series = read_series(test_path, kMissing);
  if (!test_series.labels) fail(kMissing, "test series has no labels file " + labels_path_for(test_path).string());
  const int eval_stride = get<int>(cfg, "/evaluate/stride");
  if (eval_stride <= 0) fail(kConfigError, "config: evaluate.stride must be positive");
  auto test = make_windows(test_series, t, static_cast<std::size_t>(eval_stride));
  auto injected = read_windows(injected_path, t, t, kMissing);
  auto normals = read_windows(normal_path, t, t, kMissing);
  require_match(m, test, "test");
  require_match(m, injected, "injected");
  require_match(m, normals, "normal");
  fs::create_directories(out);
  write_snapshot(out, "evaluate", cfg);

  test = apply_normalizer(test, m.norm);
  injected = apply_normalizer(injected, m.norm);
  normals = apply_normalizer(normals, m.norm);

  std::vector<Window> real;
  std::vector<std::uint8_t> labels;
  for (const auto& w : test) {
    const bool anomalous = w.label.value_or(false);
    labels.push_back(anomalous);
    if (anomalous) real.push_back(w);
  }
  if (real.empty()) fail(kDataError, "test series contains no labeled anomalies");

  EmbedderOptions eo;
  eo.epochs = emb_epochs;
  const auto emb = train_embedder(normals, seed, eo);
  const auto v_real = emb.embed(real);
  const auto v_gen = emb.embed(injected);
  std::vector<Embedding> all = v_real;
  all.insert(all.end(), v_gen.begin(), v_gen.end());
  const auto k = static_cast<std::size_t>(
      get_opt<int>(cfg, "/evaluate/partition_k").value_or(static_cast<int>(default_partition_k(all.size()))));
  const auto part = build_partition(all, std::min(k, all.size()), seed);
  json gen{{"arp", arp(v_real, v_gen)},
           {"edi", edi(v_gen, part)},
           {"K", part.size()},
           {"n_real", v_real.size()},
           {"n_gen", v_gen.size()},
           {"embedder_hash", hex64(embedder_hash(emb))},
           {"embedder_collapsed", emb.collapsed},
           {"seed", seed}};
  write_json(out / "gen_quality.json", gen);

  ScoredWindows scored;
  scored.labels = labels;
  if (detector == "classifier") {
    ClassifierOptions co;
    co.epochs = clf_epochs;
    scored.scores = train_classifier_detector(normals, injected, seed, co).score(test);
  } else {
    scored.scores = recon_score(m.model, test);
  }
  const auto dm = detection_metrics(scored);
  std::size_t positives = 0;
  for (auto l : labels) positives += l;
  json det{{"dataset", test_path.stem().string()},
           {"model_hash", m.hash},
           {"detector", detector},
           {"best_f1", dm.best_f1},
           {"best_threshold", dm.best_threshold},
           {"aupr", dm.aupr},
           {"auroc", dm.auroc},
           {"n_windows", labels.size()},
           {"prevalence", static_cast<double>(positives) / static_cast<double>(labels.size())}};
  write_json(out / "detection.json", det);
  std::cout << "ARP " << gen["arp"].get<double>() << " EDI " << gen["edi"].get<double>() << " | " << detector
            << " AUROC " << dm.auroc << " best F1 " << dm.best_f1 << " AUPR " << dm.aupr << '\n';
  if (reports) *reports = {{"gen_quality", gen}, {"detection", det}};
  return kOk;
}

int cmd_verify(json cfg, const fs::path& out) {
  theory::VerifyOptions vo;
  vo.seed = get<std::uint64_t>(cfg, "/seed");
  vo.optimum_priors = get<int>(cfg, "/verify/optimum_priors");
  vo.optimum_tolerance = get<double>(cfg, "/verify/optimum_tolerance");
  vo.jacobian_tolerance = get<double>(cfg, "/verify/jacobian_tolerance");
  const auto inflation = get<std::string>(cfg, "/verify/inflation");
  if (inflation == "squared")
    vo.inflation = theory::VarianceInflation::squared;
  else if (inflation != "linear")
    fail(kConfigError, "config: verify.inflation must be linear or squared");
  if (vo.optimum_priors < 0) fail(kConfigError, "config: verify.optimum_priors must be nonnegative");

  fs::create_directories(out);
  write_snapshot(out, "verify", cfg);
  const auto checks = theory::run_verification(vo);
  json arr = json::array();
  std::vector<std::string> failed;
  for (const auto& c : checks) {
    json inputs = json::object(), values = json::object();
    for (const auto& [k, v] : c.inputs) inputs[k] = v;
    for (const auto& [k, v] : c.values) values[k] = v;
    arr.push_back({{"name", c.name}, {"inputs", inputs}, {"values", values}, {"holds", c.holds},
                   {"tolerance", c.tolerance}});
    if (!c.holds) failed.push_back(c.name + " " + inputs.dump());
  }
  write_json(out / "verify_report.json",
             {{"checks", arr}, {"n_checks", checks.size()}, {"n_failed", failed.size()}, {"all_hold", failed.empty()}});
  std::cout << checks.size() - failed.size() << "/" << checks.size() << " checks hold\n";
  if (failed.empty()) return kOk;
  for (const auto& f : failed) std::cerr << "failed: " << f << '\n';
  return kVerifyFailure;
}

// ---------------------------------------------------------------------------
// Plots (plain SVG)

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

void write_histogram_svg(const fs::path& path, const std::vector<std::vector<double>>& sets,
                         const std::vector<std::string>& names, int bins, bool log_y) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : sets)
    for (double v : s) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!(hi > lo)) hi = lo + 1.0;
  std::vector<std::vector<int>> counts(sets.size(), std::vector<int>(bins, 0));
  int max_count = 1;
  for (std::size_t k = 0; k < sets.size(); ++k)
    for (double v : sets[k]) {
      const int b = std::min(bins - 1, static_cast<int>((v - lo) / (hi - lo) * bins));
      max_count = std::max(max_count, ++counts[k][b]);
    }
  const double w = 640, h = 400, left = 60, bottom = 40, top = 20, right = 20;
  const double pw = w - left - right, ph = h - top - bottom;
  auto ymap = [&](int c) {
    const double f = log_y ? std::log10(static_cast<double>(c)) / std::log10(static_cast<double>(max_count) * 1.5)
                           : static_cast<double>(c) / max_count;
    return top + ph * (1.0 - f);
  };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::ofstream o(path);
  if (!o) fail(kDataError, "cannot write " + path.string());
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" data-yscale=\"" << (log_y ? "log" : "linear") << "\">\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (std::size_t k = 0; k < sets.size(); ++k)
    for (int b = 0; b < bins; ++b) {
      const int c = counts[k][b];
      if (c == 0 || (log_y && c < 1)) continue;
      const double x = left + pw * b / bins, y = ymap(c);
      o << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(pw / bins) << "\" height=\""
        << fmt(top + ph - y + (log_y && c == 1 ? 2.0 : 0.0)) << "\" fill=\"" << colors[k % 4]
        << "\" fill-opacity=\"0.5\"/>\n";
    }
  o << "<text x=\"" << left << "\" y=\"" << h - 10 << "\" font-size=\"12\">reconstruction MSE " << fmt(lo) << " .. "
    << fmt(hi) << "</text>\n";
  o << "<text x=\"10\" y=\"" << top + 12 << "\" font-size=\"12\">count" << (log_y ? " (log)" : "") << "</text>\n";
  for (std::size_t k = 0; k < names.size(); ++k)
    o << "<text x=\"" << left + pw - 160 << "\" y=\"" << top + 16 + 16 * k << "\" font-size=\"12\" fill=\""
      << colors[k % 4] << "\">" << names[k] << " (n=" << sets[k].size() << ")</text>\n";
  o << "</svg>\n";
}

void write_overlay_svg(const fs::path& path, const Window& original, const Window& patched,
                       const std::vector<std::uint8_t>& mask) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto* w : {&original, &patched})
    for (double v : w->values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!(hi > lo)) hi = lo + 1.0;
  const double w = 640, rowh = 160, left = 50, right = 20;
  const double h = rowh * original.dims + 20;
  const double pw = w - left - right;
  const auto t = original.length;
  auto xmap = [&](std::size_t i) { return left + pw * (t > 1 ? static_cast<double>(i) / (t - 1) : 0.0); };
  std::ofstream o(path);
  if (!o) fail(kDataError, "cannot write " + path.string());
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  for (std::size_t d = 0; d < original.dims; ++d) {
    const double y0 = 10 + rowh * d, ph = rowh - 20;
    auto ymap = [&](double v) { return y0 + ph * (1.0 - (v - lo) / (hi - lo)); };
    for (std::size_t i = 0; i < t; ++i)
      if (!mask.empty() && mask[i * original.dims + d])
        o << "<rect x=\"" << fmt(xmap(i) - pw / (2.0 * t)) << "\" y=\"" << y0 << "\" width=\"" << fmt(pw / t)
          << "\" height=\"" << ph << "\" fill=\"#ffcccc\"/>\n";
    for (const auto& [win, color, dash] : {std::tuple{&original, "#333333", ""}, std::tuple{&patched, "#d62728", "4 2"}}) {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-dasharray=\"" << dash << "\" points=\"";
      for (std::size_t i = 0; i < t; ++i) o << fmt(xmap(i)) << "," << fmt(ymap(win->at(i, d))) << " ";
      o << "\"/>\n";
    }
    o << "<text x=\"5\" y=\"" << y0 + 12 << "\" font-size=\"11\">dim " << d << "</text>\n";
  }
  o << "</svg>\n";
}

int cmd_plot(json cfg, const fs::path& out) {
  const auto kind = get<std::string>(cfg, "/plot/kind");
  if (kind != "hist" && kind != "overlay") fail(kConfigError, "config: plot.kind must be hist or overlay");
  const auto ckpt = or_default(get_path(cfg, "/plot/checkpoint"), out / "model.gvae");
  const auto injected_path = or_default(get_path(cfg, "/plot/injected"), out / "injected.gts");
  cfg["/plot/checkpoint"_json_pointer] = ckpt.string();
  cfg["/plot/injected"_json_pointer] = injected_path.string();
  const int bins = get<int>(cfg, "/plot/bins");
  if (bins <= 0) fail(kConfigError, "config: plot.bins must be positive");

  auto m = load_model(ckpt, "");
  const auto t = static_cast<std::size_t>(m.model.arch.window_length);
  auto normals = read_windows(get_path(cfg, "/data/path"), t, t, kMissing);
  auto injected = read_windows(injected_path, t, t, kMissing);
  require_match(m, normals, "normal");
  require_match(m, injected, "injected");
  fs::create_directories(out / "plots");
  write_snapshot(out, "plot", cfg);

  if (kind == "hist") {
    const auto sn = recon_score(m.model, apply_normalizer(normals, m.norm));
    const auto si = recon_score(m.model, apply_normalizer(injected, m.norm));
    const auto path = out / "plots" / "recon_hist.svg";
    write_histogram_svg(path, {sn, si}, {"normal", "injected"}, bins, get<bool>(cfg, "/plot/log_y"));
    std::cout << "wrote " << path.string() << '\n';
    return kOk;
  }
  std::vector<std::uint8_t> mask;
  const auto mask_path = or_default(get_path(cfg, "/plot/mask"), injected_path.parent_path() / "injected.mask");
  if (fs::exists(mask_path)) {
    std::uint32_t rows = 0, cols = 0;
    mask = load_mask_binary(mask_path, rows, cols);
    if (rows != injected.size() * t || cols != injected.front().dims)
      fail(kMismatch, "mask shape does not match the injected series");
  }
  for (int idx : get<std::vector<int>>(cfg, "/plot/windows")) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= injected.size() || static_cast<std::size_t>(idx) >= normals.size())
      fail(kMissing, "window " + std::to_string(idx) + " is out of range");
    std::vector<std::uint8_t> wm;
    if (!mask.empty()) {
      const auto cells = t * injected.front().dims;
      wm.assign(mask.begin() + idx * cells, mask.begin() + (idx + 1) * cells);
    }
    const auto path = out / "plots" / ("overlay_" + std::to_string(idx) + ".svg");
    write_overlay_svg(path, normals[idx], injected[idx], wm);
    std::cout << "wrote " << path.string() << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// Sweep

int cmd_sweep(json cfg, const fs::path& out, const std::vector<std::string>& axis_flags) {
  const json defaults = default_config();
  json axes = cfg["sweep"]["axes"];
  for (const auto& a : axis_flags) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) fail(kConfigError, "--axis expects key=v1,v2,...");
    const auto key = a.substr(0, eq);
    json values = json::array();
    std::stringstream ss(a.substr(eq + 1));
    for (std::string item; std::getline(ss, item, ',');) {
      try {
        values.push_back(json::parse(item));
      } catch (const json::parse_error&) {
        values.push_back(item);
      }
    }
    axes[key] = values;
  }
  if (axes.empty()) fail(kConfigError, "sweep: no axes given");
  std::vector<std::pair<std::string, json>> grid;
  for (const auto& [key, values] : axes.items()) {
    if (key.rfind("sweep.", 0) == 0 || !defaults.contains(pointer_for(key)))
      fail(kConfigError, "sweep: unknown key '" + key + "'");
    if (!values.is_array() || values.empty()) fail(kConfigError, "sweep: axis '" + key + "' needs a nonempty list");
    grid.emplace_back(key, values);
  }
  const auto steps = get<std::vector<std::string>>(cfg, "/sweep/steps");
  for (const auto& s : steps)
    if (s != "train" && s != "inject" && s != "evaluate") fail(kConfigError, "sweep: unknown step '" + s + "'");
  cfg["sweep"]["axes"] = axes;
  fs::create_directories(out);
  write_snapshot(out, "sweep", cfg);

  std::size_t total = 1;
  for (const auto& [k, v] : grid) total *= v.size();
  json summary = json::array();
  for (std::size_t p = 0; p < total; ++p) {
    json point = cfg;
    json values = json::object();
    std::size_t rem = p;
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
      const auto& v = it->second[rem % it->second.size()];
      rem /= it->second.size();
      json patch = json::object();
      patch[pointer_for(it->first)] = v;
      json probe = default_config();
      merge_strict(probe, patch, "");
      point[pointer_for(it->first)] = v;
      values[it->first] = v;
    }
    char name[32];
    std::snprintf(name, sizeof name, "point_%03zu", p);
    const auto dir = out / name;
    std::cout << "sweep point " << p + 1 << "/" << total << " " << values.dump() << '\n';
    json entry{{"point", name}, {"values", values}};
    for (const auto& s : steps) {
      if (s == "train") {
        cmd_train(point, dir);
      } else if (s == "inject") {
        InjectSummary is;
        cmd_inject(point, dir, &is);
        entry["inject"] = {{"n_windows", is.windows}, {"patched_cells", is.patched_cells}};
      } else {
        json reports;
        cmd_evaluate(point, dir, &reports);
        entry["evaluate"] = reports;
      }
    }
    if (fs::exists(dir / "train_log.jsonl")) {
      std::ifstream log(dir / "train_log.jsonl");
      std::string line, last;
      while (std::getline(log, line))
        if (!line.empty()) last = line;
      if (!last.empty()) entry["final_epoch"] = json::parse(last);
    }
    summary.push_back(entry);
  }
  write_json(out / "sweep_summary.json", summary);
  std::cout << "wrote " << (out / "sweep_summary.json").string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// Corpus helper

int cmd_synth(const std::string& kind, int window, int dims, int count, std::uint64_t seed,
              const std::vector<std::string>& anomalies, double magnitude, double fraction, const fs::path& file) {
  if (window <= 0 || dims <= 0 || count <= 0) fail(kConfigError, "synth: window, dims and count must be positive");
  auto ws = synth_normal(parse_normal_kind(kind), window, dims, count, seed);
  std::vector<std::uint8_t> window_labels(ws.size(), 0);
  if (!anomalies.empty()) {
    const std::size_t groups = anomalies.size();
    for (std::size_t k = 0; k < groups; ++k) {
      const std::size_t begin = ws.size() * k / groups, end = ws.size() * (k + 1) / groups;
      std::vector<Window> part(ws.begin() + begin, ws.begin() + end);
      auto [corrupted, labels] =
          synth_inject(part, parse_anomaly_kind(anomalies[k]), magnitude, seed + 100 * (k + 1), fraction);
      for (std::size_t i = 0; i < corrupted.size(); ++i) {
        ws[begin + i] = corrupted[i];
        window_labels[begin + i] = labels[i];
      }
    }
  }
  auto series = windows_to_series(ws, file.stem().string());
  if (!anomalies.empty()) {
    std::vector<std::uint8_t> steps;
    for (auto l : window_labels) steps.insert(steps.end(), static_cast<std::size_t>(window), l);
    series.labels = steps;
  }
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  if (format_for(file) == SeriesFormat::binary)
    save_series_binary(series, file);
  else
    save_series_csv(series, file);
  std::cout << "wrote " << ws.size() << " windows to " << file.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"genias: train, inject, evaluate and verify a perturbation VAE anomaly generator"};
  app.require_subcommand(1);
  FlagValues fv;

  auto* train_cmd = app.add_subcommand("train", "train a model on normal windows");
  auto* inject_cmd = app.add_subcommand("inject", "generate and patch anomalies into windows");
  auto* eval_cmd = app.add_subcommand("evaluate", "generation quality and detection reports");
  auto* verify_cmd = app.add_subcommand("verify", "numerical checks of the theoretical results");
  auto* plot_cmd = app.add_subcommand("plot", "SVG histograms and overlays");
  auto* sweep_cmd = app.add_subcommand("sweep", "run a config grid and aggregate reports");
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic corpus file");

  for (auto* c : {train_cmd, inject_cmd, eval_cmd, verify_cmd, plot_cmd, sweep_cmd}) add_common(c, fv);
  add_specs(train_cmd, fv, train_flags());
  add_specs(inject_cmd, fv, inject_flags());
  add_specs(eval_cmd, fv, evaluate_flags());
  add_specs(verify_cmd, fv, verify_flags());
  add_specs(plot_cmd, fv, plot_flags());
  std::vector<int> plot_windows;
  bool linear_y = false;
  plot_cmd->add_option("--window-index", plot_windows, "overlay window indices");
  plot_cmd->add_flag("--linear-y", linear_y, "linear histogram y-axis");
  add_specs(sweep_cmd, fv, train_flags());
  add_specs(sweep_cmd, fv, inject_flags());
  std::vector<std::string> axes;
  std::string steps;
  sweep_cmd->add_option("--axis", axes, "grid axis key=v1,v2,... (repeatable)");
  sweep_cmd->add_option("--steps", steps, "comma-separated steps: train,inject,evaluate");

  std::string synth_kind = "sine_mix", synth_file;
  int synth_window = 200, synth_dims = 1, synth_count = 100;
  std::uint64_t synth_seed = 7;
  std::vector<std::string> synth_anomalies;
  double synth_magnitude = 0.5, synth_fraction = 0.5;
  synth_cmd->add_option("--kind", synth_kind, "sine_mix or ar_process");
  synth_cmd->add_option("--window", synth_window, "window length");
  synth_cmd->add_option("--dims", synth_dims, "dimensions");
  synth_cmd->add_option("--count", synth_count, "number of windows");
  synth_cmd->add_option("--seed", synth_seed, "seed");
  synth_cmd->add_option("--anomaly", synth_anomalies, "anomaly families, one contiguous group each")->delimiter(',');
  synth_cmd->add_option("--magnitude", synth_magnitude, "anomaly magnitude");
  synth_cmd->add_option("--fraction", synth_fraction, "fraction of corrupted windows per group");
  synth_cmd->add_option("--file", synth_file, "output .csv or .gts")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (synth_cmd->parsed())
      return cmd_synth(synth_kind, synth_window, synth_dims, synth_count, synth_seed, synth_anomalies,
                       synth_magnitude, synth_fraction, synth_file);

    json cfg = default_config();
    if (!fv.config_path.empty()) merge_strict(cfg, load_config_file(fv.config_path), "");
    std::vector<const std::vector<FlagSpec>*> groups;
    if (train_cmd->parsed()) groups = {&train_flags()};
    if (inject_cmd->parsed()) groups = {&inject_flags()};
    if (eval_cmd->parsed()) groups = {&evaluate_flags()};
    if (verify_cmd->parsed()) groups = {&verify_flags()};
    if (plot_cmd->parsed()) groups = {&plot_flags()};
    if (sweep_cmd->parsed()) groups = {&train_flags(), &inject_flags()};
    apply_flags(cfg, fv, groups);
    if (plot_cmd->parsed()) {
      if (!plot_windows.empty()) cfg["plot"]["windows"] = plot_windows;
      if (linear_y) cfg["plot"]["log_y"] = false;
    }
    if (sweep_cmd->parsed() && !steps.empty()) {
      json list = json::array();
      std::stringstream ss(steps);
      for (std::string s; std::getline(ss, s, ',');) list.push_back(s);
      cfg["sweep"]["steps"] = list;
    }
    if (get<bool>(cfg, "/deterministic")) set_kernel_threads(1);
    const fs::path out = output_root(fv);

    if (train_cmd->parsed()) return cmd_train(cfg, out);
    if (inject_cmd->parsed()) return cmd_inject(cfg, out);
    if (eval_cmd->parsed()) return cmd_evaluate(cfg, out);
    if (verify_cmd->parsed()) return cmd_verify(cfg, out);
    if (plot_cmd->parsed()) return cmd_plot(cfg, out);
    if (sweep_cmd->parsed()) return cmd_sweep(cfg, out, axes);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const TrainingAborted& e) {
    std::cerr << "training aborted: " << e.what() << '\n';
    return kTrainingAbort;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kMismatch;
  } catch (const FormatError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const ValidationError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const ShapeError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const MetricError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
