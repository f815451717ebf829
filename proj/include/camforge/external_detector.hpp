#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>

#include "camforge/detector.hpp"

namespace camforge {

inline constexpr std::chrono::seconds kDefaultBridgeTimeout{120};
inline constexpr const char* kBridgeTimeoutEnv = "CAMFORGE_BRIDGE_TIMEOUT_SECS";

/// Reads CAMFORGE_BRIDGE_TIMEOUT_SECS; falls back to `fallback` when the
/// variable is unset. A malformed value throws std::invalid_argument.
std::chrono::milliseconds bridge_timeout_from_env(std::chrono::milliseconds fallback = kDefaultBridgeTimeout);

struct ExternalDetectorOptions {
  std::filesystem::path exchange_dir;
  std::chrono::milliseconds timeout = kDefaultBridgeTimeout;
  std::chrono::milliseconds poll_interval{10};
  /// Leave request directories in place after a successful round trip.
  bool keep_requests = false;
};

/// Client side of the directory exchange protocol. Each detect() call creates
/// one request subdirectory holding `image.png` and `request.json`, then waits
/// for the bridge to write `response.json` (plus CCT1 activation files) and
/// the empty `done` sentinel. Requests are serialized per client.
class ExternalDetector final : public Detector {
 public:
  explicit ExternalDetector(ExternalDetectorOptions options);

  DetectorOutput detect(const Image& image, bool want_activations) const override;
  std::size_t max_concurrency() const noexcept override { return 1; }
  std::string name() const override { return "external"; }

  const ExternalDetectorOptions& options() const noexcept { return options_; }

 private:
  ExternalDetectorOptions options_;
  std::string session_;
  mutable std::mutex mutex_;
  mutable std::atomic<std::uint64_t> counter_{0};
};

/// Parses a bridge `response.json` found in `request_dir`. Exposed for tests.
DetectorOutput parse_bridge_response(const std::filesystem::path& request_dir, std::size_t image_width,
                                     std::size_t image_height, bool want_activations);

}  // namespace camforge
