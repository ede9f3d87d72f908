#include <algorithm>
#include <cstdlib>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include "genias/kernels.hpp"

using namespace genias;

namespace {

Tensor3 random_tensor(int n, int c, int t, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor3 x(n, c, t);
  for (auto& v : x.v) v = u(rng);
  return x;
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<double> v(n);
  for (auto& e : v) e = u(rng);
  return v;
}

double best_ms(const std::function<void()>& fn, int reps) {
  fn();
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double omp) {
  std::printf("%-18s serial %9.3f ms   openmp %9.3f ms   speedup %5.2fx\n", name, serial, omp, serial / omp);
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::max(1, std::atoi(argv[1])) : 5;
  std::mt19937_64 rng(1);
  std::printf("threads: %d, best of %d\n", kernel_threads(), reps);

  const int n = 32, c = 64, t = 200, k = 3;
  const auto x = random_tensor(n, c, t, rng);
  const auto cg = ConvGeom::causal(c, c, k, 4);
  const auto cw = random_vec(static_cast<std::size_t>(c) * c * k, rng), cb = random_vec(c, rng);
  Tensor3 y;
  kernels::conv1d_forward(x, cw, cb, cg, y);
  const auto gy = random_tensor(n, c, y.t, rng);
  std::vector<double> gw(cw.size()), gb(c);
  Tensor3 gx;

  report("conv1d forward", best_ms([&] { kernels::serial::conv1d_forward(x, cw, cb, cg, y); }, reps),
         best_ms([&] { kernels::conv1d_forward(x, cw, cb, cg, y); }, reps));
  report("conv1d backward",
         best_ms([&] { kernels::serial::conv1d_backward(x, cw, gy, cg, &gx, gw, gb); }, reps),
         best_ms([&] { kernels::conv1d_backward(x, cw, gy, cg, &gx, gw, gb); }, reps));

  const TConvGeom tg{c, c, 4, 2, 1, 0};
  const auto xs = random_tensor(n, c, t / 2, rng);
  const auto tw = random_vec(static_cast<std::size_t>(c) * c * tg.kernel, rng);
  Tensor3 ty;
  kernels::tconv1d_forward(xs, tw, cb, tg, ty);
  const auto tgy = random_tensor(n, c, ty.t, rng);
  std::vector<double> tgw(tw.size());
  report("tconv1d forward", best_ms([&] { kernels::serial::tconv1d_forward(xs, tw, cb, tg, ty); }, reps),
         best_ms([&] { kernels::tconv1d_forward(xs, tw, cb, tg, ty); }, reps));
  report("tconv1d backward",
         best_ms([&] { kernels::serial::tconv1d_backward(xs, tw, tgy, tg, &gx, tgw, gb); }, reps),
         best_ms([&] { kernels::tconv1d_backward(xs, tw, tgy, tg, &gx, tgw, gb); }, reps));

  const int out = 100;
  const auto lw = random_vec(static_cast<std::size_t>(out) * c * t, rng), lb = random_vec(out, rng);
  Tensor3 ly;
  kernels::linear_forward(x, lw, lb, out, ly);
  const auto lgy = random_tensor(n, out, 1, rng);
  std::vector<double> lgw(lw.size()), lgb(out);
  report("linear forward", best_ms([&] { kernels::serial::linear_forward(x, lw, lb, out, ly); }, reps),
         best_ms([&] { kernels::linear_forward(x, lw, lb, out, ly); }, reps));
  report("linear backward",
         best_ms([&] { kernels::serial::linear_backward(x, lw, lgy, &gx, lgw, lgb); }, reps),
         best_ms([&] { kernels::linear_backward(x, lw, lgy, &gx, lgw, lgb); }, reps));
}
