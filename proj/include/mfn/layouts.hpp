#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfn/io.hpp"
#include "mfn/signal.hpp"
#include "mfn/types.hpp"

namespace mfn {

/// A memory factor of a layout before payloads and weights are bound.
struct LayoutFactor {
  std::string group;
  std::vector<VarId> neighbors;
  /// Factors with equal keys share one trained payload.
  std::size_t payload_key = 0;
};

struct Skeleton {
  std::vector<VariableSpec> variables;
  std::vector<LayoutFactor> factors;
  std::size_t payload_count = 0;
};

/// Start offsets of length-`patch` windows every `stride` positions, with a
/// truncated final window wherever the length does not divide evenly. Any
/// window intersecting the range by at least one position is kept.
std::vector<std::size_t> patch_starts(std::size_t len, std::size_t patch,
                                      std::size_t stride);

enum class ChannelMode : std::uint8_t { Mono, Rgb, RgbGray };

struct ImageLayoutSpec {
  std::size_t width = 0, height = 0;
  std::size_t patch = 8, stride = 4, linked_patch = 4;
  ChannelMode channels = ChannelMode::Rgb;
  /// x0, y0, x1, y1 (exclusive), absolute image coordinates. Whole image
  /// when absent.
  std::optional<std::array<std::size_t, 4>> region;
};

/// Overlapping patch layout over an image region: per-channel patch factors
/// plus small all-channel "linked" factors (which also carry the gray
/// variables when present).
struct ImageLayout {
  ImageLayoutSpec spec;
  Skeleton skeleton;
  std::size_t x0 = 0, y0 = 0, rw = 0, rh = 0;  // region placement and size
  std::size_t color_channels = 1;
  bool has_gray = false;

  std::size_t channel_count() const {
    return color_channels + (has_gray ? 1 : 0);
  }
  /// Absolute image coordinates; channel `color_channels` is gray.
  VarId var(std::size_t channel, std::size_t ax, std::size_t ay) const;
  /// Values of one factor's variables in a training/evidence image,
  /// normalized to [0, 1]; gray derives from the RGB bytes.
  std::vector<Value> exemplar_row(std::size_t factor,
                                  const ImageBuffer& img) const;
  /// Observed value of one variable in an input image.
  double observed(VarId v, const ImageBuffer& img) const;
  /// Channel and absolute position of a variable id.
  void locate(VarId v, std::size_t& channel, std::size_t& ax,
              std::size_t& ay) const;
};

ImageLayout build_image_layout(const ImageLayoutSpec& spec);
/// Same overlap geometry, but one factor covers every channel of its patch
/// and there are no linked factors.
ImageLayout build_combined_color_layout(const ImageLayoutSpec& spec);

/// Full-spectrum factors `factor_width` frames wide, overlapping by half,
/// over an n_bins x n_frames complex spectrogram.
struct SpectrogramLayout {
  std::size_t n_bins = 0, n_frames = 0, factor_width = 0;
  bool shared = false;
  Skeleton skeleton;

  VarId var(std::size_t bin, std::size_t frame) const {
    return static_cast<VarId>(bin * n_frames + frame);
  }
  std::vector<Value> exemplar_row(std::size_t factor,
                                  const Spectrogram& s) const;
};

SpectrogramLayout build_spectrogram_layout(std::size_t n_bins,
                                           std::size_t n_frames,
                                           std::size_t factor_width,
                                           bool shared);

/// Four-level pixel/label pyramid over centered 32x32 digits: integer pixel
/// variables (weight 1 at assembly) and ten-class label variables
/// (weight 32), with 8x8-patch factors bridging adjacent levels.
struct HierarchyLayout {
  Skeleton skeleton;
  static constexpr std::array<std::size_t, 4> pixel_side = {32, 16, 8, 4};
  static constexpr std::array<std::size_t, 4> label_side = {15, 7, 3, 1};

  VarId pixel_var(std::size_t level, std::size_t x, std::size_t y) const;
  VarId label_var(std::size_t level, std::size_t lx, std::size_t ly) const;
  VarId top_label() const { return label_var(3, 0, 0); }

  /// Level pyramid of a 32x32 gray image: level n+1 cells are the rounded
  /// means of the 2x2 patches below.
  static std::vector<std::vector<std::int64_t>> pyramid(
      const ImageBuffer& digit);
  /// Training row for one factor: pixels from the pyramid, every label set
  /// to the true class.
  std::vector<Value> exemplar_row(
      std::size_t factor, const std::vector<std::vector<std::int64_t>>& pyr,
      std::int32_t label) const;
};

HierarchyLayout build_mnist_hierarchy();

}  // namespace mfn
