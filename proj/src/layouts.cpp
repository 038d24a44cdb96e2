#include "mfn/layouts.hpp"

#include <algorithm>
#include <cmath>

namespace mfn {

std::vector<std::size_t> patch_starts(std::size_t len, std::size_t patch,
                                      std::size_t stride) {
  if (len == 0) throw ValidationError("empty range has no patches");
  std::vector<std::size_t> starts = {0};
  for (std::size_t s = stride; s + stride < len; s += stride)
    starts.push_back(s);
  (void)patch;
  return starts;
}

namespace {

std::size_t clamp_end(std::size_t start, std::size_t patch, std::size_t len) {
  return std::min(start + patch, len);
}

}  // namespace

VarId ImageLayout::var(std::size_t channel, std::size_t ax,
                       std::size_t ay) const {
  return static_cast<VarId>(channel * rw * rh + (ay - y0) * rw + (ax - x0));
}

void ImageLayout::locate(VarId v, std::size_t& channel, std::size_t& ax,
                         std::size_t& ay) const {
  channel = v / (rw * rh);
  std::size_t rest = v % (rw * rh);
  ax = x0 + rest % rw;
  ay = y0 + rest / rw;
}

double ImageLayout::observed(VarId v, const ImageBuffer& img) const {
  std::size_t c, ax, ay;
  locate(v, c, ax, ay);
  if (has_gray && c == color_channels) {
    if (img.channels == 1) return img.at(ax, ay, 0);
    return gray_of_rgb(img.at(ax, ay, 0), img.at(ax, ay, 1), img.at(ax, ay, 2));
  }
  return img.at(ax, ay, std::min(c, img.channels - 1));
}

std::vector<Value> ImageLayout::exemplar_row(std::size_t factor,
                                             const ImageBuffer& img) const {
  if (img.width != spec.width || img.height != spec.height)
    throw ValidationError("image size does not match the layout");
  const auto& f = skeleton.factors[factor];
  std::vector<Value> row;
  row.reserve(f.neighbors.size());
  for (VarId v : f.neighbors) row.emplace_back(observed(v, img));
  return row;
}

namespace {

ImageLayout image_layout_base(const ImageLayoutSpec& spec) {
  ImageLayout out;
  out.spec = spec;
  if (spec.width == 0 || spec.height == 0)
    throw ValidationError("layout needs a nonempty image");
  if (spec.stride * 2 != spec.patch || spec.linked_patch * 2 != spec.patch)
    throw ValidationError(
        "layout geometry requires stride = patch/2 and linked = patch/2");
  out.x0 = 0;
  out.y0 = 0;
  std::size_t x1 = spec.width, y1 = spec.height;
  if (spec.region) {
    out.x0 = (*spec.region)[0];
    out.y0 = (*spec.region)[1];
    x1 = (*spec.region)[2];
    y1 = (*spec.region)[3];
    if (x1 <= out.x0 || y1 <= out.y0 || x1 > spec.width || y1 > spec.height)
      throw ValidationError("layout region lies outside the image");
  }
  out.rw = x1 - out.x0;
  out.rh = y1 - out.y0;
  if (out.rw < spec.patch || out.rh < spec.patch)
    throw ValidationError("layout region is smaller than one patch");
  out.color_channels = (spec.channels == ChannelMode::Mono) ? 1 : 3;
  out.has_gray = spec.channels == ChannelMode::RgbGray;
  out.skeleton.variables.assign(out.channel_count() * out.rw * out.rh,
                                VariableSpec::real_clamped(1.0));
  return out;
}

void append_patch_pixels(const ImageLayout& l, std::size_t channel,
                         std::size_t sx, std::size_t sy, std::size_t px,
                         std::size_t py, std::vector<VarId>& neighbors) {
  std::size_t ex = clamp_end(sx, px, l.rw), ey = clamp_end(sy, py, l.rh);
  for (std::size_t y = sy; y < ey; ++y)
    for (std::size_t x = sx; x < ex; ++x)
      neighbors.push_back(l.var(channel, l.x0 + x, l.y0 + y));
}

}  // namespace

ImageLayout build_image_layout(const ImageLayoutSpec& spec) {
  ImageLayout out = image_layout_base(spec);
  auto xs = patch_starts(out.rw, spec.patch, spec.stride);
  auto ys = patch_starts(out.rh, spec.patch, spec.stride);

  for (std::size_t c = 0; c < out.color_channels; ++c) {
    for (std::size_t sy : ys) {
      for (std::size_t sx : xs) {
        LayoutFactor f;
        f.group = "mono:" + std::to_string(c);
        append_patch_pixels(out, c, sx, sy, spec.patch, spec.patch,
                            f.neighbors);
        f.payload_key = out.skeleton.payload_count++;
        out.skeleton.factors.push_back(std::move(f));
      }
    }
  }

  // Linked factors join the channels over small non-overlapping tiles; the
  // gray variables (when present) ride along here.
  if (out.color_channels == 3) {
    for (std::size_t sy = 0; sy < out.rh; sy += spec.linked_patch) {
      for (std::size_t sx = 0; sx < out.rw; sx += spec.linked_patch) {
        LayoutFactor f;
        f.group = "linked";
        for (std::size_t c = 0; c < out.channel_count(); ++c)
          append_patch_pixels(out, c, sx, sy, spec.linked_patch,
                              spec.linked_patch, f.neighbors);
        f.payload_key = out.skeleton.payload_count++;
        out.skeleton.factors.push_back(std::move(f));
      }
    }
  }
  return out;
}

ImageLayout build_combined_color_layout(const ImageLayoutSpec& spec) {
  ImageLayout out = image_layout_base(spec);
  auto xs = patch_starts(out.rw, spec.patch, spec.stride);
  auto ys = patch_starts(out.rh, spec.patch, spec.stride);
  for (std::size_t sy : ys) {
    for (std::size_t sx : xs) {
      LayoutFactor f;
      f.group = "combined";
      for (std::size_t c = 0; c < out.channel_count(); ++c)
        append_patch_pixels(out, c, sx, sy, spec.patch, spec.patch,
                            f.neighbors);
      f.payload_key = out.skeleton.payload_count++;
      out.skeleton.factors.push_back(std::move(f));
    }
  }
  return out;
}

std::vector<Value> SpectrogramLayout::exemplar_row(std::size_t factor,
                                                   const Spectrogram& s) const {
  if (s.n_bins != n_bins || s.n_frames != n_frames)
    throw ValidationError("spectrogram shape does not match the layout");
  const auto& f = skeleton.factors[factor];
  std::vector<Value> row;
  row.reserve(f.neighbors.size());
  for (VarId v : f.neighbors) {
    std::size_t bin = v / n_frames, frame = v % n_frames;
    row.emplace_back(s.at(bin, frame));
  }
  return row;
}

SpectrogramLayout build_spectrogram_layout(std::size_t n_bins,
                                           std::size_t n_frames,
                                           std::size_t factor_width,
                                           bool shared) {
  if (factor_width < 1) throw ValidationError("factor width must be >= 1");
  if (n_bins == 0 || n_frames == 0)
    throw ValidationError("spectrogram layout needs bins and frames");
  SpectrogramLayout out;
  out.n_bins = n_bins;
  out.n_frames = n_frames;
  out.factor_width = factor_width;
  out.shared = shared;
  out.skeleton.variables.assign(n_bins * n_frames,
                                VariableSpec::complex_val());

  std::size_t stride = std::max<std::size_t>(1, factor_width / 2);
  for (std::size_t start : patch_starts(n_frames, factor_width, stride)) {
    std::size_t end = clamp_end(start, factor_width, n_frames);
    // A shared payload requires one arity, so truncated edge windows are
    // dropped there; every window stays in the per-position variant.
    if (shared && end - start < factor_width) continue;
    LayoutFactor f;
    f.group = "spec";
    for (std::size_t frame = start; frame < end; ++frame)
      for (std::size_t bin = 0; bin < n_bins; ++bin)
        f.neighbors.push_back(out.var(bin, frame));
    f.payload_key = shared ? 0 : out.skeleton.factors.size();
    out.skeleton.factors.push_back(std::move(f));
  }
  if (out.skeleton.factors.empty())
    throw ValidationError(
        "no full-width windows fit; shorten the factor width or disable "
        "payload sharing");
  out.skeleton.payload_count = shared ? 1 : out.skeleton.factors.size();
  return out;
}

VarId HierarchyLayout::pixel_var(std::size_t level, std::size_t x,
                                 std::size_t y) const {
  std::size_t base = 0;
  for (std::size_t l = 0; l < level; ++l) base += pixel_side[l] * pixel_side[l];
  return static_cast<VarId>(base + y * pixel_side[level] + x);
}

VarId HierarchyLayout::label_var(std::size_t level, std::size_t lx,
                                 std::size_t ly) const {
  std::size_t base = 0;
  for (std::size_t l = 0; l < 4; ++l) base += pixel_side[l] * pixel_side[l];
  for (std::size_t l = 0; l < level; ++l) base += label_side[l] * label_side[l];
  return static_cast<VarId>(base + ly * label_side[level] + lx);
}

std::vector<std::vector<std::int64_t>> HierarchyLayout::pyramid(
    const ImageBuffer& digit) {
  if (digit.width != 32 || digit.height != 32 || digit.channels != 1)
    throw ValidationError("hierarchy expects 32x32 single-channel digits");
  std::vector<std::vector<std::int64_t>> levels(4);
  levels[0].resize(32 * 32);
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x)
      levels[0][y * 32 + x] = digit.byte_at(x, y, 0);
  for (std::size_t l = 1; l < 4; ++l) {
    std::size_t side = pixel_side[l];
    levels[l].resize(side * side);
    for (std::size_t y = 0; y < side; ++y) {
      for (std::size_t x = 0; x < side; ++x) {
        std::size_t below = pixel_side[l - 1];
        std::int64_t sum = levels[l - 1][(2 * y) * below + 2 * x] +
                           levels[l - 1][(2 * y) * below + 2 * x + 1] +
                           levels[l - 1][(2 * y + 1) * below + 2 * x] +
                           levels[l - 1][(2 * y + 1) * below + 2 * x + 1];
        levels[l][y * side + x] = std::llround(static_cast<double>(sum) / 4.0);
      }
    }
  }
  return levels;
}

std::vector<Value> HierarchyLayout::exemplar_row(
    std::size_t factor, const std::vector<std::vector<std::int64_t>>& pyr,
    std::int32_t label) const {
  const auto& f = skeleton.factors[factor];
  std::vector<Value> row;
  row.reserve(f.neighbors.size());
  std::size_t pixel_total = 0;
  for (std::size_t l = 0; l < 4; ++l)
    pixel_total += pixel_side[l] * pixel_side[l];
  for (VarId v : f.neighbors) {
    if (v < pixel_total) {
      std::size_t rest = v, level = 0;
      while (rest >= pixel_side[level] * pixel_side[level]) {
        rest -= pixel_side[level] * pixel_side[level];
        ++level;
      }
      row.emplace_back(pyr[level][rest]);
    } else {
      row.emplace_back(Label{label});
    }
  }
  return row;
}

HierarchyLayout build_mnist_hierarchy() {
  HierarchyLayout out;
  std::size_t n_vars = 0;
  for (std::size_t l = 0; l < 4; ++l)
    n_vars += out.pixel_side[l] * out.pixel_side[l];
  std::size_t pixel_total = n_vars;
  for (std::size_t l = 0; l < 4; ++l)
    n_vars += out.label_side[l] * out.label_side[l];
  out.skeleton.variables.reserve(n_vars);
  for (std::size_t v = 0; v < pixel_total; ++v)
    out.skeleton.variables.push_back(VariableSpec::integer_ranged(0, 255));
  for (std::size_t v = pixel_total; v < n_vars; ++v)
    out.skeleton.variables.push_back(VariableSpec::label(10));

  for (std::size_t level = 0; level < 3; ++level) {
    std::size_t side = out.pixel_side[level];
    for (std::size_t py = 0; py + 8 <= side; py += 4) {
      for (std::size_t px = 0; px + 8 <= side; px += 4) {
        LayoutFactor f;
        f.group = "level:" + std::to_string(level);
        // 64 same-level pixels.
        for (std::size_t y = py; y < py + 8; ++y)
          for (std::size_t x = px; x < px + 8; ++x)
            f.neighbors.push_back(out.pixel_var(level, x, y));
        // 9 same-level labels: the stride-2 4x4 subregions inside the patch.
        for (std::size_t ly = py / 2; ly <= py / 2 + 2; ++ly)
          for (std::size_t lx = px / 2; lx <= px / 2 + 2; ++lx)
            f.neighbors.push_back(out.label_var(level, lx, ly));
        // 16 next-level pixels covering the same region.
        for (std::size_t y = py / 2; y < py / 2 + 4; ++y)
          for (std::size_t x = px / 2; x < px / 2 + 4; ++x)
            f.neighbors.push_back(out.pixel_var(level + 1, x, y));
        // 1 next-level label.
        f.neighbors.push_back(out.label_var(level + 1, px / 4, py / 4));
        f.payload_key = out.skeleton.payload_count++;
        out.skeleton.factors.push_back(std::move(f));
      }
    }
  }
  return out;
}

}  // namespace mfn
