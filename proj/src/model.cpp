#include "genias/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "genias/data.hpp"

namespace genias {

namespace {

constexpr char kMagic[4] = {'G', 'V', 'A', 'E'};
constexpr std::uint16_t kFormatVersion = 1;

TConvGeom upsample_geom(int cin, int cout, int k) {
  // Doubles the length for odd k.
  return {cin, cout, k, 2, (k - 1) / 2, 1};
}

TConvGeom same_geom(int cin, int cout, int k) { return {cin, cout, k, 1, (k - 1) / 2, 0}; }

ModelParams build(const Architecture& a) {
  a.validate();
  ModelParams m;
  m.arch = a;
  int cin = a.dims;
  for (std::size_t i = 0; i < a.channels.size(); ++i) {
    m.encoder.emplace_back("encoder." + std::to_string(i),
                           ConvGeom::causal(cin, a.channels[i], a.kernel, a.dilations[i]));
    cin = a.channels[i];
  }
  const int flat = cin * a.window_length;
  m.mu_head = nn::Linear("mu_head", flat, a.latent);
  m.logvar_head = nn::Linear("logvar_head", flat, a.latent);
  const int c2 = a.channels[2], c1 = a.channels[1], c0 = a.channels[0];
  m.decoder_in = nn::Linear("decoder.in", a.latent, c2 * (a.window_length / 4));
  m.decoder.emplace_back("decoder.0", upsample_geom(c2, c1, a.kernel));
  m.decoder.emplace_back("decoder.1", upsample_geom(c1, c0, a.kernel));
  m.decoder.emplace_back("decoder.2", same_geom(c0, a.dims, a.kernel));
  m.psi_raw = nn::Parameter("psi", a.vector_psi ? static_cast<std::size_t>(a.latent) : 1);
  return m;
}

// Inverse of 1 + softplus for psi > 1.
double raw_from_psi(double psi) {
  if (!(psi > 1.0)) throw ParameterError("perturbation scale must exceed 1");
  return std::log(std::expm1(psi - 1.0));
}

std::vector<double> psi_values(const ModelParams& m) { return m.psi().values(m.arch.latent); }

Tensor3 latent_tensor(const std::vector<std::vector<double>>& zs, int latent) {
  Tensor3 t(static_cast<int>(zs.size()), latent, 1);
  for (std::size_t b = 0; b < zs.size(); ++b) {
    if (static_cast<int>(zs[b].size()) != latent)
      throw ShapeError("decode: latent length " + std::to_string(zs[b].size()) + ", expected " +
                       std::to_string(latent));
    std::copy(zs[b].begin(), zs[b].end(), t.v.begin() + static_cast<std::ptrdiff_t>(b * latent));
  }
  return t;
}

void check_input(const ModelParams& m, const Window& x) {
  if (static_cast<int>(x.length) != m.arch.window_length || static_cast<int>(x.dims) != m.arch.dims)
    throw ShapeError("model expects " + std::to_string(m.arch.window_length) + "x" +
                     std::to_string(m.arch.dims) + " windows, got " + std::to_string(x.length) +
                     "x" + std::to_string(x.dims));
}

std::vector<LatentGaussian> latents_from(const Tensor3& mu, const Tensor3& logvar) {
  std::vector<LatentGaussian> out(mu.n);
  for (int b = 0; b < mu.n; ++b) {
    auto& l = out[b];
    l.mu.assign(mu.sample(b).begin(), mu.sample(b).end());
    l.sigma.resize(mu.c);
    for (int j = 0; j < mu.c; ++j)
      l.sigma[j] = std::max(std::exp(0.5 * logvar(b, j, 0)), kSigmaFloor);
  }
  return out;
}

}  // namespace

PerturbationScale PerturbationScale::from_psi(std::vector<double> psi) {
  PerturbationScale s;
  for (double p : psi) s.raw.push_back(raw_from_psi(p));
  return s;
}

double PerturbationScale::at(std::size_t j) const {
  return 1.0 + nn::softplus(raw.size() == 1 ? raw[0] : raw.at(j));
}

std::vector<double> PerturbationScale::values(std::size_t latent) const {
  std::vector<double> out(latent);
  for (std::size_t j = 0; j < latent; ++j) out[j] = at(j);
  return out;
}

std::vector<nn::Parameter*> ModelParams::parameters() {
  std::vector<nn::Parameter*> p;
  for (auto& c : encoder) {
    p.push_back(&c.weight);
    p.push_back(&c.bias);
  }
  for (auto* l : {&mu_head, &logvar_head, &decoder_in}) {
    p.push_back(&l->weight);
    p.push_back(&l->bias);
  }
  for (auto& c : decoder) {
    p.push_back(&c.weight);
    p.push_back(&c.bias);
  }
  p.push_back(&psi_raw);
  return p;
}

std::vector<const nn::Parameter*> ModelParams::parameters() const {
  auto mut = const_cast<ModelParams*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

void ModelParams::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

ModelParams init_model(const GenConfig& config, std::uint64_t seed) {
  ModelParams m = build(config.arch);
  Rng rng(seed);
  for (auto& c : m.encoder) c.init(rng);
  m.mu_head.init(rng);
  m.logvar_head.init(rng);
  m.decoder_in.init(rng);
  for (auto& c : m.decoder) c.init(rng);
  std::fill(m.psi_raw.value.begin(), m.psi_raw.value.end(), raw_from_psi(2.0));
  return m;
}

EncoderTape encode_tape(const ModelParams& model, const Tensor3& x, Rng* dropout_rng) {
  EncoderTape tape;
  tape.input = x;
  const Tensor3* h = &tape.input;
  for (const auto& conv : model.encoder) {
    tape.pre.push_back(conv.forward(*h));
    Tensor3 act = nn::relu(tape.pre.back());
    tape.masks.push_back(dropout_rng
                             ? nn::make_dropout_mask(act.v.size(), model.arch.dropout, *dropout_rng)
                             : nn::DropoutMask{});
    tape.out.push_back(nn::apply_dropout(act, tape.masks.back()));
    h = &tape.out.back();
  }
  tape.mu = model.mu_head.forward(*h);
  tape.logvar = model.logvar_head.forward(*h);
  return tape;
}

DecoderTape decode_tape(const ModelParams& model, const Tensor3& z) {
  DecoderTape tape;
  tape.z = z;
  tape.lin_pre = model.decoder_in.forward(z).reshaped(model.arch.channels[2],
                                                      model.arch.window_length / 4);
  tape.in.push_back(nn::relu(tape.lin_pre));
  for (std::size_t i = 0; i < model.decoder.size(); ++i) {
    tape.pre.push_back(model.decoder[i].forward(tape.in.back()));
    if (i + 1 < model.decoder.size()) tape.in.push_back(nn::relu(tape.pre.back()));
  }
  tape.out = nn::sigmoid(tape.pre.back());
  return tape;
}

void encoder_backward(ModelParams& model, const EncoderTape& tape, const Tensor3& g_mu,
                      const Tensor3& g_logvar) {
  const Tensor3& feat = tape.out.back();
  Tensor3 g = model.mu_head.backward(feat, g_mu);
  Tensor3 g2 = model.logvar_head.backward(feat, g_logvar);
  for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] += g2.v[i];
  for (std::size_t i = model.encoder.size(); i-- > 0;) {
    g = nn::apply_dropout(g, tape.masks[i]);
    g = nn::relu_backward(tape.pre[i], g);
    const Tensor3& in = i == 0 ? tape.input : tape.out[i - 1];
    if (i == 0) {
      // Input gradient is not needed.
      kernels::conv1d_backward(in, model.encoder[0].weight.value, g, model.encoder[0].geom,
                               nullptr, model.encoder[0].weight.grad, model.encoder[0].bias.grad);
    } else {
      g = model.encoder[i].backward(in, g);
    }
  }
}

Tensor3 decoder_backward(ModelParams& model, const DecoderTape& tape, const Tensor3& g_out) {
  Tensor3 g = nn::sigmoid_backward(tape.out, g_out);
  for (std::size_t i = model.decoder.size(); i-- > 0;) {
    g = model.decoder[i].backward(tape.in[i], g);
    g = nn::relu_backward(i == 0 ? tape.lin_pre : tape.pre[i - 1], g);
  }
  g = std::move(g).reshaped(static_cast<int>(g.sample_size()), 1);
  return model.decoder_in.backward(tape.z, g);
}

LatentGaussian encode(const ModelParams& model, const Window& x) {
  return encode(model, std::span<const Window>(&x, 1)).front();
}

std::vector<LatentGaussian> encode(const ModelParams& model, std::span<const Window> xs) {
  if (xs.empty()) return {};
  for (const auto& x : xs) check_input(model, x);
  auto tape = encode_tape(model, to_batch(xs), nullptr);
  return latents_from(tape.mu, tape.logvar);
}

std::vector<double> sample_latent(const LatentGaussian& lat, Rng& rng) {
  auto eps = standard_normal(rng, lat.mu.size());
  std::vector<double> z(lat.mu.size());
  for (std::size_t j = 0; j < z.size(); ++j) z[j] = lat.mu[j] + lat.sigma[j] * eps[j];
  return z;
}

std::vector<double> perturb_latent(const LatentGaussian& lat, std::span<const double> psi,
                                   std::span<const double> eps) {
  std::vector<double> z(lat.mu.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double p = psi.size() == 1 ? psi[0] : psi[j];
    z[j] = lat.mu[j] + p * (lat.sigma[j] * eps[j]);
  }
  return z;
}

std::vector<double> perturb_latent(const LatentGaussian& lat, const PerturbationScale& psi, Rng& rng) {
  auto eps = standard_normal(rng, lat.mu.size());
  return perturb_latent(lat, psi.values(lat.mu.size()), eps);
}

Window decode(const ModelParams& model, std::span<const double> z) {
  return decode(model, std::vector<std::vector<double>>{{z.begin(), z.end()}}).front();
}

std::vector<Window> decode(const ModelParams& model, const std::vector<std::vector<double>>& zs) {
  if (zs.empty()) return {};
  auto tape = decode_tape(model, latent_tensor(zs, model.arch.latent));
  return from_batch(tape.out);
}

ForwardResult forward(const ModelParams& model, std::span<const Window> xs, Rng& rng) {
  auto pass = forward_train(model, xs, rng, false);
  return {std::move(pass.recon), std::move(pass.anomalous), std::move(pass.latents)};
}

TrainingPass forward_train(const ModelParams& model, std::span<const Window> xs, Rng& rng,
                           bool training) {
  for (const auto& x : xs) check_input(model, x);
  TrainingPass pass;
  const int B = static_cast<int>(xs.size());
  const int L = model.arch.latent;
  pass.batch = B;
  pass.enc = encode_tape(model, to_batch(xs), training ? &rng : nullptr);
  pass.latents = latents_from(pass.enc.mu, pass.enc.logvar);
  pass.psi = psi_values(model);

  const std::size_t n = static_cast<std::size_t>(B) * L;
  pass.eps = standard_normal(rng, n);
  pass.eps_tilde = standard_normal(rng, n);
  pass.sigma.resize(n);

  Tensor3 z(2 * B, L, 1);
  for (int b = 0; b < B; ++b)
    for (int j = 0; j < L; ++j) {
      const std::size_t k = static_cast<std::size_t>(b) * L + j;
      const double mu = pass.latents[b].mu[j];
      const double s = pass.latents[b].sigma[j];
      pass.sigma[k] = s;
      z(b, j, 0) = mu + s * pass.eps[k];
      z(B + b, j, 0) = mu + pass.psi[j] * (s * pass.eps_tilde[k]);
    }
  pass.dec = decode_tape(model, z);
  auto outs = from_batch(pass.dec.out);
  pass.recon.assign(std::make_move_iterator(outs.begin()), std::make_move_iterator(outs.begin() + B));
  pass.anomalous.assign(std::make_move_iterator(outs.begin() + B), std::make_move_iterator(outs.end()));
  for (int b = 0; b < B; ++b) {
    pass.recon[b].origin = pass.anomalous[b].origin = xs[b].origin;
  }
  return pass;
}

void backward_train(ModelParams& model, const TrainingPass& pass,
                    std::span<const Window> g_recon, std::span<const Window> g_anomalous,
                    std::span<const LatentGrad> g_latent) {
  const int B = pass.batch;
  const int L = model.arch.latent;
  std::vector<Window> g_out;
  g_out.reserve(2 * B);
  g_out.insert(g_out.end(), g_recon.begin(), g_recon.end());
  g_out.insert(g_out.end(), g_anomalous.begin(), g_anomalous.end());
  Tensor3 gz = decoder_backward(model, pass.dec, to_batch(g_out));

  Tensor3 g_mu(B, L, 1), g_logvar(B, L, 1);
  const bool vector_psi = model.psi_raw.value.size() > 1;
  for (int b = 0; b < B; ++b)
    for (int j = 0; j < L; ++j) {
      const std::size_t k = static_cast<std::size_t>(b) * L + j;
      const double gz1 = gz(b, j, 0);
      const double gz2 = gz(B + b, j, 0);
      const double s = pass.sigma[k];
      double gmu = gz1 + gz2;
      double gsigma = gz1 * pass.eps[k] + gz2 * pass.psi[j] * pass.eps_tilde[k];
      if (!g_latent.empty()) {
        gmu += g_latent[b].mu[j];
        gsigma += g_latent[b].sigma[j];
      }
      g_mu(b, j, 0) = gmu;
      // sigma = exp(logvar / 2), held constant when clamped at the floor.
      g_logvar(b, j, 0) = s > kSigmaFloor ? gsigma * 0.5 * s : 0.0;
      const double gpsi = gz2 * s * pass.eps_tilde[k];
      const std::size_t pj = vector_psi ? j : 0;
      model.psi_raw.grad[pj] += gpsi * nn::sigmoid(model.psi_raw.value[pj]);
    }
  encoder_backward(model, pass.enc, g_mu, g_logvar);
}

// Checkpoint layout: "GVAE", u16 version, architecture, u32 blob count, then per blob
// u32 name length, name bytes, u64 element count, f64 little-endian payload.

namespace {

template <typename T>
void put(std::vector<char>& out, T v) {
  const char* p = reinterpret_cast<const char*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

struct Reader {
  std::span<const char> bytes;
  std::size_t pos = 0;

  template <typename T>
  T get() {
    if (pos + sizeof(T) > bytes.size()) throw CheckpointError("checkpoint truncated");
    T v;
    std::memcpy(&v, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  void read(void* dst, std::size_t n) {
    if (pos + n > bytes.size()) throw CheckpointError("checkpoint truncated");
    std::memcpy(dst, bytes.data() + pos, n);
    pos += n;
  }
};

}  // namespace

std::vector<char> serialize_checkpoint(const ModelParams& model) {
  std::vector<char> out(kMagic, kMagic + 4);
  put<std::uint16_t>(out, kFormatVersion);
  const auto& a = model.arch;
  put<std::uint32_t>(out, a.window_length);
  put<std::uint32_t>(out, a.dims);
  put<std::uint32_t>(out, a.latent);
  put<std::uint32_t>(out, a.kernel);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(a.channels.size()));
  for (int c : a.channels) put<std::uint32_t>(out, c);
  for (int d : a.dilations) put<std::uint32_t>(out, d);
  put<double>(out, a.dropout);
  put<std::uint8_t>(out, a.vector_psi ? 1 : 0);
  const auto params = model.parameters();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out.insert(out.end(), p->name.begin(), p->name.end());
    put<std::uint64_t>(out, p->value.size());
    const char* d = reinterpret_cast<const char*>(p->value.data());
    out.insert(out.end(), d, d + p->value.size() * sizeof(double));
  }
  return out;
}

ModelParams deserialize_checkpoint(std::span<const char> bytes) {
  Reader r{bytes};
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("checkpoint: bad magic");
  const auto version = r.get<std::uint16_t>();
  if (version != kFormatVersion)
    throw CheckpointError("checkpoint: unsupported format version " + std::to_string(version));
  Architecture a;
  a.window_length = static_cast<int>(r.get<std::uint32_t>());
  a.dims = static_cast<int>(r.get<std::uint32_t>());
  a.latent = static_cast<int>(r.get<std::uint32_t>());
  a.kernel = static_cast<int>(r.get<std::uint32_t>());
  const auto blocks = r.get<std::uint32_t>();
  if (blocks > 64) throw CheckpointError("checkpoint: implausible block count");
  a.channels.resize(blocks);
  a.dilations.resize(blocks);
  for (auto& c : a.channels) c = static_cast<int>(r.get<std::uint32_t>());
  for (auto& d : a.dilations) d = static_cast<int>(r.get<std::uint32_t>());
  a.dropout = r.get<double>();
  a.vector_psi = r.get<std::uint8_t>() != 0;

  ModelParams m;
  try {
    m = build(a);
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint: invalid architecture: ") + e.what());
  }
  auto params = m.parameters();
  const auto count = r.get<std::uint32_t>();
  if (count != params.size()) throw CheckpointError("checkpoint: parameter count mismatch");
  for (auto* p : params) {
    const auto len = r.get<std::uint32_t>();
    if (len > 4096) throw CheckpointError("checkpoint: implausible name length");
    std::string name(len, '\0');
    r.read(name.data(), len);
    if (name != p->name) throw CheckpointError("checkpoint: expected blob '" + p->name + "', found '" + name + "'");
    const auto n = r.get<std::uint64_t>();
    if (n != p->value.size()) throw CheckpointError("checkpoint: size mismatch for " + name);
    r.read(p->value.data(), n * sizeof(double));
  }
  if (r.pos != bytes.size()) throw CheckpointError("checkpoint: trailing bytes");
  return m;
}

void save_checkpoint(const ModelParams& model, const std::filesystem::path& path) {
  auto bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace genias
