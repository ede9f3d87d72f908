#include "genias/tensor.hpp"

namespace genias {

Tensor3 to_batch(std::span<const Window> windows) {
  if (windows.empty()) return {};
  const auto& first = windows.front();
  Tensor3 out(static_cast<int>(windows.size()), static_cast<int>(first.dims),
              static_cast<int>(first.length));
  for (std::size_t b = 0; b < windows.size(); ++b) {
    require_same_shape(first, windows[b], "to_batch");
    for (std::size_t t = 0; t < first.length; ++t)
      for (std::size_t d = 0; d < first.dims; ++d)
        out(static_cast<int>(b), static_cast<int>(d), static_cast<int>(t)) = windows[b].at(t, d);
  }
  return out;
}

std::vector<Window> from_batch(const Tensor3& batch) {
  std::vector<Window> out;
  out.reserve(batch.n);
  for (int b = 0; b < batch.n; ++b) {
    Window w(batch.t, batch.c);
    for (int t = 0; t < batch.t; ++t)
      for (int d = 0; d < batch.c; ++d) w.at(t, d) = batch(b, d, t);
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace genias
