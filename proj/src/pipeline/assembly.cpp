#include <algorithm>
#include <stdexcept>

#include "camforge/pipeline.hpp"

namespace camforge {

SuppressionResult suppress_background(const GridStack& z, const GridStack& kept) {
  if (z.channels() != kept.channels()) {
    throw std::invalid_argument("suppress_background: score and activation stacks are not aligned");
  }
  SuppressionResult out;
  for (std::size_t c = 0; c < z.channels(); ++c) {
    double sum = 0.0;
    for (const float v : z[c].values()) sum += v;
    if (sum == 0.0) {
      ++out.suppressed;
      continue;
    }
    out.z.push_back(z[c]);
    out.activations.push_back(kept[c]);
    out.surviving.push_back(c);
  }
  return out;
}

Cam assemble_cam(const GridStack& z_hat, const GridStack& u_hat, const PipelineConfig& cfg, std::size_t width,
                 std::size_t height, std::size_t suppressed) {
  if (z_hat.channels() != u_hat.channels()) {
    throw std::invalid_argument("assemble_cam: score and activation stacks are not aligned");
  }
  if (z_hat.empty()) return Cam::zeros(width, height, suppressed);
  if (z_hat.width() != width || z_hat.height() != height || u_hat.width() != width ||
      u_hat.height() != height) {
    throw std::invalid_argument("assemble_cam: stack dimensions differ from the output size");
  }

  const std::size_t n = width * height;
  std::vector<double> acc(n, 0.0);
  if (cfg.score_reduction == ScoreReduction::pixelwise) {
    const Stack<double> delta = pixelwise_channel_softmax(z_hat);
    for (std::size_t c = 0; c < u_hat.channels(); ++c) {
      const auto d = delta[c].values();
      const auto u = u_hat[c].values();
      for (std::size_t i = 0; i < n; ++i) acc[i] += d[i] * static_cast<double>(u[i]);
    }
  } else {
    std::vector<double> sums;
    for (const auto& g : z_hat) {
      double s = 0.0;
      for (const float v : g.values()) s += v;
      sums.push_back(s);
    }
    const std::vector<double> weights = softmax(sums);
    for (std::size_t c = 0; c < u_hat.channels(); ++c) {
      const auto u = u_hat[c].values();
      for (std::size_t i = 0; i < n; ++i) acc[i] += weights[c] * static_cast<double>(u[i]);
    }
  }

  Grid2D raw(width, height);
  auto dst = raw.values();
  for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<float>(std::max(0.0, acc[i]));
  Grid2D normalized = minmax_normalize(raw);
  return {std::move(raw), std::move(normalized), suppressed};
}

}  // namespace camforge
