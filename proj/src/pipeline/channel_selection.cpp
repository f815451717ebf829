#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "camforge/pipeline.hpp"

namespace camforge {

void PipelineConfig::validate() const {
  if (!(channel_keep_fraction > 0.0 && channel_keep_fraction <= 1.0)) {
    throw std::invalid_argument("channel_keep_fraction must be in (0, 1]");
  }
  if (!(sigma_sq > 0.0)) throw std::invalid_argument("sigma_sq must be positive");
  if (!(match_iou_min >= 0.0 && match_iou_min < 1.0)) {
    throw std::invalid_argument("match_iou_min must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
}

std::size_t kept_channel_count(std::size_t total, double fraction) {
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(total) + 0.5));
  return std::min(total, std::max<std::size_t>(1, k));
}

GridStack upsample_layers(const std::vector<GridStack>& layers, std::size_t width, std::size_t height) {
  GridStack out;
  for (const auto& layer : layers) {
    for (const auto& g : layer) out.push_back(bilinear_upsample(g, width, height));
  }
  return out;
}

GridStack gather_channels(const GridStack& stack, const std::vector<std::size_t>& indices) {
  GridStack out;
  for (const std::size_t i : indices) out.push_back(stack[i]);
  return out;
}

ChannelSelection select_channels(const GridStack& upsampled, const PipelineConfig& cfg) {
  cfg.validate();
  const std::size_t channels = upsampled.channels();
  if (channels == 0) throw std::invalid_argument("select_channels: empty stack");
  if (channels == 1) return {{0.0}, {0}};

  const std::size_t w = upsampled.width();
  const std::size_t h = upsampled.height();
  std::vector<double> total(w * h, 0.0);
  for (const auto& g : upsampled) {
    const auto v = g.values();
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += v[i];
  }

  ChannelSelection sel;
  sel.kl_scores.resize(channels);
  const double others = static_cast<double>(channels - 1);
  std::vector<double> rest(w * h);
  for (std::size_t c = 0; c < channels; ++c) {
    const auto v = upsampled[c].values();
    for (std::size_t i = 0; i < rest.size(); ++i) rest[i] = (total[i] - v[i]) / others;
    const ProbVector p = to_distribution(upsampled[c], cfg.epsilon);
    const ProbVector q = to_distribution(Grid<double>(w, h, rest), cfg.epsilon);
    sel.kl_scores[c] = kl_divergence(p, q);
  }

  std::vector<std::size_t> order(channels);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sel.kl_scores[a] > sel.kl_scores[b]; });
  order.resize(kept_channel_count(channels, cfg.channel_keep_fraction));
  std::sort(order.begin(), order.end());
  sel.kept_indices = std::move(order);
  return sel;
}

}  // namespace camforge
