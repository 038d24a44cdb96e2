#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfn/types.hpp"

namespace mfn {

/// 8-bit interleaved image; channels: 1 (gray), 3 (RGB), 4 (RGB + gray).
struct ImageBuffer {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> bytes;  // row-major, interleaved

  static ImageBuffer create(std::size_t w, std::size_t h, std::size_t c) {
    if (c != 1 && c != 3 && c != 4)
      throw ValidationError("images carry 1, 3, or 4 channels");
    return {w, h, c, std::vector<std::uint8_t>(w * h * c, 0)};
  }

  std::uint8_t byte_at(std::size_t x, std::size_t y, std::size_t c) const {
    return bytes[(y * width + x) * channels + c];
  }
  void set_byte(std::size_t x, std::size_t y, std::size_t c, std::uint8_t v) {
    bytes[(y * width + x) * channels + c] = v;
  }
  /// Normalized view in [0, 1].
  double at(std::size_t x, std::size_t y, std::size_t c) const {
    return static_cast<double>(byte_at(x, y, c)) / 255.0;
  }
  /// Clamp to [0, 1], then round half-up to a byte.
  void set(std::size_t x, std::size_t y, std::size_t c, double v) {
    double clamped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    set_byte(x, y, c, static_cast<std::uint8_t>(clamped * 255.0 + 0.5));
  }
};

/// PPM (P3/P6) and PGM (P2/P5), maxval 255 only. Returns 3 channels for PPM
/// and 1 for PGM.
ImageBuffer read_image(const std::string& path);
/// Writes binary PPM for 3 channels, binary PGM for 1. Four-channel buffers
/// (RGB + gray) are rejected; strip the derived channel first.
void write_image(const ImageBuffer& img, const std::string& path);

/// Luminance coefficients used for the derived gray channel.
double gray_of_rgb(double r, double g, double b);

/// Colorization post-processing: scale an RGB pixel so its gray value
/// matches `target_gray`; near-black pixels come back gray on all channels.
void scale_rgb_to_gray(double target_gray, double& r, double& g, double& b);

using Matrix = std::vector<std::vector<double>>;

/// Rectangular numeric CSV; values survive a round-trip exactly.
Matrix read_csv_matrix(const std::string& path);
void write_csv_matrix(const Matrix& m, const std::string& path);

/// Flat, schema-checked run configuration. Unknown keys are rejected by
/// name; sections group related knobs.
struct RunConfig {
  std::string task;    // table | nmf | pca
  std::string layout;  // image | combined | spectrogram | hierarchy

  // layout
  std::size_t width = 16, height = 16;
  std::string channels = "rgb";  // mono | rgb | rgb+gray
  std::optional<std::array<std::size_t, 4>> region;  // x0 y0 x1 y1 exclusive
  std::size_t patch = 8, stride = 4, linked_patch = 4;
  std::size_t spec_bins = 64, spec_width = 10;
  bool shared_payload = true;

  // weights
  double evidence_weight = 1.0;
  double factor_weight = 1.0;

  // factor config
  double lambda = 1.0;
  double alpha = -1.0;       // < 0: scaled default per factor size
  int hidden_p = 5;
  double subsample_prob = 1.0;
  int nmf_max_iters = 300;
  double nmf_tol = 1e-6;

  // schedule
  std::string schedule = "serial";  // serial | simul:<fraction>
  std::uint64_t max_iterations = 0;
  bool rollback = true;

  std::uint64_t seed = 1;
  std::string model_dir = "model";
};

RunConfig load_config(const std::string& path);
void save_config(const RunConfig& c, const std::string& path);

}  // namespace mfn
