#include "camforge/external_detector.hpp"

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "camforge/cct.hpp"
#include "camforge/error.hpp"
#include "camforge/png_io.hpp"

namespace camforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw BackendIoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Resolves a response-relative file name, refusing anything outside the
// request directory.
fs::path resolve_inside(const fs::path& request_dir, const std::string& name) {
  const fs::path rel(name);
  if (rel.is_absolute()) throw BackendIoError("response references absolute path " + name);
  const fs::path full = (request_dir / rel).lexically_normal();
  const fs::path inside = full.lexically_relative(request_dir.lexically_normal());
  if (inside.empty() || inside == "." || *inside.begin() == "..") {
    throw BackendIoError("response references file outside the request directory: " + name);
  }
  return full;
}

}  // namespace

std::chrono::milliseconds bridge_timeout_from_env(std::chrono::milliseconds fallback) {
  const char* raw = std::getenv(kBridgeTimeoutEnv);
  if (raw == nullptr || *raw == '\0') return fallback;
  char* end = nullptr;
  const double secs = std::strtod(raw, &end);
  if (end == raw || *end != '\0' || !(secs > 0.0)) {
    throw std::invalid_argument(std::string(kBridgeTimeoutEnv) + " must be a positive number of seconds");
  }
  return std::chrono::milliseconds(static_cast<std::int64_t>(secs * 1000.0));
}

ExternalDetector::ExternalDetector(ExternalDetectorOptions options) : options_(std::move(options)) {
  if (options_.exchange_dir.empty()) throw std::invalid_argument("external detector needs an exchange directory");
  std::ostringstream ss;
  ss << "req_" << ::getpid() << '_'
     << std::chrono::steady_clock::now().time_since_epoch().count();
  session_ = ss.str();
}

DetectorOutput ExternalDetector::detect(const Image& image, bool want_activations) const {
  std::lock_guard lock(mutex_);
  std::error_code ec;
  if (!fs::is_directory(options_.exchange_dir, ec)) {
    throw BackendIoError("bridge exchange directory unreachable: " + options_.exchange_dir.string());
  }
  const fs::path dir = fs::absolute(options_.exchange_dir) /
                       (session_ + '_' + std::to_string(counter_.fetch_add(1)));
  try {
    fs::create_directories(dir);
    const fs::path image_path = dir / "image.png";
    write_png(image_path, to_pixels(image));

    const json request = {{"image", image_path.string()}, {"want_activations", want_activations}};
    {
      std::ofstream f(dir / "request.json.tmp");
      f << request.dump() << '\n';
      if (!f) throw BackendIoError("failed writing request in " + dir.string());
    }
    fs::rename(dir / "request.json.tmp", dir / "request.json");
  } catch (const fs::filesystem_error& e) {
    throw BackendIoError(std::string("cannot create bridge request: ") + e.what());
  } catch (const std::runtime_error& e) {
    throw BackendIoError(std::string("cannot create bridge request: ") + e.what());
  }

  const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
  while (!fs::exists(dir / "done", ec)) {
    if (std::chrono::steady_clock::now() >= deadline) {
      throw BackendIoError("bridge did not answer " + dir.string() + " within " +
                           std::to_string(options_.timeout.count()) + " ms");
    }
    std::this_thread::sleep_for(options_.poll_interval);
  }

  if (fs::exists(dir / "error.json", ec)) {
    throw BackendIoError("bridge reported an error for " + dir.string() + ": " + read_text(dir / "error.json"));
  }
  DetectorOutput out = parse_bridge_response(dir, image.width(), image.height(), want_activations);
  if (!options_.keep_requests) fs::remove_all(dir, ec);
  return out;
}

DetectorOutput parse_bridge_response(const fs::path& request_dir, std::size_t image_width,
                                     std::size_t image_height, bool want_activations) {
  json doc;
  try {
    doc = json::parse(read_text(request_dir / "response.json"));
  } catch (const json::exception& e) {
    throw BackendIoError("malformed response.json in " + request_dir.string() + ": " + e.what());
  }

  DetectorOutput out;
  try {
    std::vector<Detection> items;
    for (const auto& d : doc.at("detections")) {
      const auto& box = d.at("box");
      if (!box.is_array() || box.size() != 4) throw BackendIoError("detection box must have 4 numbers");
      Detection det{{box[0].get<double>(), box[1].get<double>(), box[2].get<double>(), box[3].get<double>()},
                    d.at("score").get<double>()};
      if (!det.box.valid() || !det.box.intersects_extent(image_width, image_height)) {
        throw BackendIoError("detection box is degenerate or outside the image");
      }
      if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) {
        throw BackendIoError("detection score outside [0, 1]");
      }
      items.push_back(det);
    }
    out.detections = DetectionSet(std::move(items));

    if (want_activations) {
      const auto& files = doc.at("activations");
      if (files.empty()) throw BackendIoError("activations requested but none returned");
      if (doc.contains("num_layers") && doc.at("num_layers").get<std::size_t>() != files.size()) {
        throw BackendIoError("num_layers disagrees with the activations list");
      }
      for (const auto& name : files) {
        GridStack stack = tensor_to_stack(read_cct(resolve_inside(request_dir, name.get<std::string>())));
        if (stack.empty()) throw BackendIoError("activation layer has no channels");
        if (stack.width() > image_width || stack.height() > image_height) {
          throw BackendIoError("activation layer is larger than the input image");
        }
        out.layer_activations.push_back(std::move(stack));
      }
    }
  } catch (const json::exception& e) {
    throw BackendIoError("malformed response.json in " + request_dir.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw BackendIoError("bad activation file in " + request_dir.string() + ": " + e.what());
  }
  return out;
}

}  // namespace camforge
