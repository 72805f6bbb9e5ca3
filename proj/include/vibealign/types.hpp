#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vibealign {

/// Row-major single-channel image; intensities nominally in [0,1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // height * width

  Image() = default;
  Image(int h, int w) : height(h), width(w), pixels(static_cast<size_t>(h) * w, 0.0f) {}

  float& at(int i, int j) { return pixels[static_cast<size_t>(i) * width + j]; }
  float at(int i, int j) const { return pixels[static_cast<size_t>(i) * width + j]; }
};

/// T consecutive grayscale frames sampled at a fixed frame rate.
struct FrameSequence {
  int height = 0;
  int width = 0;
  double frame_rate = 0.0;         // [Hz]
  double timestamp_origin = 0.0;   // [s] acquisition time of frame 0
  std::vector<float> data;         // frame-major, frames * height * width

  int frame_count() const {
    const size_t px = static_cast<size_t>(height) * width;
    return px == 0 ? 0 : static_cast<int>(data.size() / px);
  }
  std::span<const float> frame(int t) const {
    const size_t px = static_cast<size_t>(height) * width;
    return {data.data() + static_cast<size_t>(t) * px, px};
  }
  float at(int t, int i, int j) const {
    return data[(static_cast<size_t>(t) * height + i) * width + j];
  }
};

/// Invalid configuration (rejected before any work starts).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid runtime input (bad signal length, degenerate request, ...).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File and serialization failures; `code()` distinguishes the cause.
class IoError : public std::runtime_error {
 public:
  enum class Code { OpenFailed, BadMagic, VersionMismatch, BadHeader, Truncated, WriteFailed };

  IoError(Code code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

}  // namespace vibealign
