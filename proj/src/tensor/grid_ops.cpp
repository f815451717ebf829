#include "camforge/grid.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace camforge {

namespace {

constexpr double kProbTolerance = 1e-9;

// Half-pixel-center source coordinate, clamped to [0, src_len - 1].
double source_coord(std::size_t dst, std::size_t src_len, std::size_t dst_len) {
  const double scale = static_cast<double>(src_len) / static_cast<double>(dst_len);
  const double s = (static_cast<double>(dst) + 0.5) * scale - 0.5;
  return std::clamp(s, 0.0, static_cast<double>(src_len - 1));
}

}  // namespace

ProbVector::ProbVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("distribution must be nonempty");
  double sum = 0.0;
  for (const double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("distribution entries must be finite and nonnegative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbTolerance) {
    throw std::invalid_argument("distribution does not sum to 1 (sum=" + std::to_string(sum) + ")");
  }
}

template <typename T>
Grid<T> bilinear_upsample(const Grid<T>& src, std::size_t target_w, std::size_t target_h) {
  if (target_w == 0 || target_h == 0) {
    throw std::invalid_argument("bilinear_upsample: zero-sized target");
  }
  if (target_w < src.width() || target_h < src.height()) {
    throw std::invalid_argument("bilinear_upsample: target smaller than source");
  }

  // Column taps are shared by every row.
  struct Tap {
    std::size_t i0, i1;
    double frac;
  };
  auto taps = [](std::size_t src_len, std::size_t dst_len) {
    std::vector<Tap> out(dst_len);
    for (std::size_t d = 0; d < dst_len; ++d) {
      const double s = source_coord(d, src_len, dst_len);
      const auto i0 = static_cast<std::size_t>(std::floor(s));
      const std::size_t i1 = std::min(i0 + 1, src_len - 1);
      out[d] = {i0, i1, s - static_cast<double>(i0)};
    }
    return out;
  };
  const auto xs = taps(src.width(), target_w);
  const auto ys = taps(src.height(), target_h);

  Grid<T> out(target_w, target_h);
  for (std::size_t y = 0; y < target_h; ++y) {
    const Tap& ty = ys[y];
    for (std::size_t x = 0; x < target_w; ++x) {
      const Tap& tx = xs[x];
      const double top = (1.0 - tx.frac) * static_cast<double>(src(tx.i0, ty.i0)) +
                         tx.frac * static_cast<double>(src(tx.i1, ty.i0));
      const double bottom = (1.0 - tx.frac) * static_cast<double>(src(tx.i0, ty.i1)) +
                            tx.frac * static_cast<double>(src(tx.i1, ty.i1));
      out(x, y) = static_cast<T>((1.0 - ty.frac) * top + ty.frac * bottom);
    }
  }
  return out;
}

Grid2D minmax_normalize(const Grid2D& g) {
  const auto [lo_it, hi_it] = std::minmax_element(g.values().begin(), g.values().end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  Grid2D out(g.width(), g.height());
  if (!(hi > lo)) return out;
  const double range = hi - lo;
  auto dst = out.values();
  auto src = g.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(std::clamp((static_cast<double>(src[i]) - lo) / range, 0.0, 1.0));
  }
  return out;
}

Image hadamard_mask(const Image& image, const Grid2D& mask) {
  if (mask.width() != image.width() || mask.height() != image.height()) {
    throw std::invalid_argument("hadamard_mask: mask and image dimensions differ");
  }
  Image out = image;
  const auto m = mask.values();
  for (std::size_t c = 0; c < 3; ++c) {
    auto dst = out.channel(c).values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] *= m[i];
  }
  return out;
}

template <typename T>
Stack<double> pixelwise_channel_softmax(const Stack<T>& stack) {
  if (stack.empty()) throw std::invalid_argument("pixelwise_channel_softmax: empty stack");
  const std::size_t channels = stack.channels();
  const std::size_t w = stack.width();
  const std::size_t h = stack.height();
  const std::size_t n = w * h;

  std::vector<std::vector<double>> out(channels, std::vector<double>(n));
  std::vector<double> e(channels);
  for (std::size_t i = 0; i < n; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < channels; ++c) {
      peak = std::max(peak, static_cast<double>(stack[c].values()[i]));
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      e[c] = std::exp(static_cast<double>(stack[c].values()[i]) - peak);
      sum += e[c];
    }
    for (std::size_t c = 0; c < channels; ++c) out[c][i] = e[c] / sum;
  }

  Stack<double> result;
  for (auto& v : out) result.push_back(Grid<double>(w, h, std::move(v)));
  return result;
}

std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) return {};
  const double peak = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - peak);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

template <typename T>
ProbVector to_distribution(const Grid<T>& g, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("to_distribution: epsilon must be positive");
  const auto vals = g.values();
  const double lo = static_cast<double>(*std::min_element(vals.begin(), vals.end()));
  std::vector<double> out(vals.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    out[i] = static_cast<double>(vals[i]) - lo + epsilon;
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return ProbVector(std::move(out));
}

double kl_divergence(const ProbVector& p, const ProbVector& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: length mismatch");
  const auto pv = p.values();
  const auto qv = q.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    if (pv[i] == 0.0) continue;
    if (qv[i] == 0.0) return std::numeric_limits<double>::infinity();
    sum += pv[i] * std::log(pv[i] / qv[i]);
  }
  return sum;
}

template Grid<float> bilinear_upsample(const Grid<float>&, std::size_t, std::size_t);
template Grid<double> bilinear_upsample(const Grid<double>&, std::size_t, std::size_t);
template Stack<double> pixelwise_channel_softmax(const Stack<float>&);
template Stack<double> pixelwise_channel_softmax(const Stack<double>&);
template ProbVector to_distribution(const Grid<float>&, double);
template ProbVector to_distribution(const Grid<double>&, double);

}  // namespace camforge
