#include <cmath>
#include <stdexcept>
#include <string>

#include "camforge/baselines.hpp"
#include "camforge/error.hpp"

namespace camforge {

std::vector<double> principal_direction(const GridStack& stack, const PowerIterationOptions& opt) {
  const std::size_t c = stack.channels();
  if (c < 2) throw std::invalid_argument("eigen_cam needs at least two channels");

  // Gram matrix M^T M, channels x channels.
  std::vector<double> gram(c * c, 0.0);
  for (std::size_t a = 0; a < c; ++a) {
    const auto va = stack[a].values();
    for (std::size_t b = a; b < c; ++b) {
      const auto vb = stack[b].values();
      double s = 0.0;
      for (std::size_t i = 0; i < va.size(); ++i) s += static_cast<double>(va[i]) * vb[i];
      gram[a * c + b] = gram[b * c + a] = s;
    }
  }

  std::vector<double> v(c, 1.0 / std::sqrt(static_cast<double>(c)));
  std::vector<double> next(c);
  for (int it = 0; it < opt.max_iterations; ++it) {
    double norm = 0.0;
    for (std::size_t a = 0; a < c; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < c; ++b) s += gram[a * c + b] * v[b];
      next[a] = s;
      norm += s * s;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) return v;  // all-zero activations: any direction projects to zero
    double change = 0.0;
    for (std::size_t a = 0; a < c; ++a) {
      next[a] /= norm;
      change += (next[a] - v[a]) * (next[a] - v[a]);
    }
    v.swap(next);
    if (std::sqrt(change) <= opt.tolerance) return v;
  }
  throw NumericError("power iteration did not converge after " + std::to_string(opt.max_iterations) +
                     " iterations");
}

Cam eigen_cam_from_stack(const GridStack& stack, const PowerIterationOptions& opt) {
  const std::vector<double> v = principal_direction(stack, opt);
  Grid2D raw(stack.width(), stack.height());
  auto dst = raw.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < v.size(); ++c) s += v[c] * static_cast<double>(stack[c].values()[i]);
    dst[i] = static_cast<float>(std::abs(s));
  }
  Grid2D normalized = minmax_normalize(raw);
  return {std::move(raw), std::move(normalized), 0};
}

Cam eigen_cam(const Image& image, const Detector& detector, const PowerIterationOptions& opt) {
  const DetectorOutput base = detector.detect(image, true);
  if (base.layer_activations.empty()) throw PipelineError("detector returned no activations");
  return eigen_cam_from_stack(upsample_layers(base.layer_activations, image.width(), image.height()), opt);
}

}  // namespace camforge
