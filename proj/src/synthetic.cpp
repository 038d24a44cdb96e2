#include "mfn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mfn/rng.hpp"
#include "mfn/types.hpp"

namespace mfn {

namespace {

struct Seg {
  double x0, y0, x1, y1;
};

double dist_to_segment(double px, double py, const Seg& s) {
  double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
  double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0
                 ? std::clamp(((px - s.x0) * dx + (py - s.y0) * dy) / len2,
                              0.0, 1.0)
                 : 0.0;
  double cx = s.x0 + t * dx, cy = s.y0 + t * dy;
  return std::hypot(px - cx, py - cy);
}

}  // namespace

ImageBuffer synth_face(std::uint64_t seed, std::size_t width,
                       std::size_t height) {
  if (width < 12 || height < 12)
    throw ValidationError("faces need at least 12x12 pixels");
  Rng rng(seed);
  ImageBuffer img = ImageBuffer::create(width, height, 3);
  double skin_r = rng.uniform(0.7, 0.95);
  double skin_g = skin_r * rng.uniform(0.72, 0.85);
  double skin_b = skin_g * rng.uniform(0.75, 0.9);
  double hair_level = rng.uniform(0.1, 0.4);
  double eye_r = rng.uniform(0.05, 0.25);
  double eye_g = rng.uniform(0.1, 0.5);
  double eye_b = rng.uniform(0.3, 0.9);
  double jitter_x = rng.uniform(-0.02, 0.02);
  double jitter_y = rng.uniform(-0.02, 0.02);
  double eye_size = rng.uniform(0.05, 0.09);
  double mouth_size = rng.uniform(0.12, 0.2);

  auto w = static_cast<double>(width), h = static_cast<double>(height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double u = (static_cast<double>(x) + 0.5) / w;
      double v = (static_cast<double>(y) + 0.5) / h;
      double r = skin_r * (1.0 - 0.25 * v);
      double g = skin_g * (1.0 - 0.25 * v);
      double b = skin_b * (1.0 - 0.25 * v);
      if (v < 0.18) {  // hair band
        r *= hair_level;
        g *= hair_level;
        b *= hair_level;
      }
      for (double ex : {0.32, 0.68}) {
        double d = std::hypot(u - ex - jitter_x, v - 0.4 - jitter_y);
        if (d < eye_size) {
          double blend = std::min(1.0, (eye_size - d) / 0.02);
          r = r * (1 - blend) + eye_r * blend;
          g = g * (1 - blend) + eye_g * blend;
          b = b * (1 - blend) + eye_b * blend;
        }
      }
      double md = std::hypot((u - 0.5 - jitter_x) / 1.8, v - 0.72 - jitter_y);
      if (md < mouth_size && v > 0.7) {
        double blend = std::min(1.0, (mouth_size - md) / 0.03);
        r = r * (1 - blend) + 0.75 * blend;
        g = g * (1 - blend) + 0.2 * blend;
        b = b * (1 - blend) + 0.25 * blend;
      }
      img.set(x, y, 0, r);
      img.set(x, y, 1, g);
      img.set(x, y, 2, b);
    }
  }
  return img;
}

ImageBuffer synth_texture(std::uint64_t seed, std::size_t width,
                          std::size_t height) {
  Rng rng(seed);
  ImageBuffer img = ImageBuffer::create(width, height, 3);
  for (std::size_t c = 0; c < 3; ++c) {
    double a[3], fx[3], fy[3], ph[3];
    for (int k = 0; k < 3; ++k) {
      a[k] = rng.uniform(0.08, 0.25);
      fx[k] = rng.uniform(-2.5, 2.5);
      fy[k] = rng.uniform(-2.5, 2.5);
      ph[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    double base = rng.uniform(0.25, 0.75);
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        double u = static_cast<double>(x) / static_cast<double>(width);
        double v = static_cast<double>(y) / static_cast<double>(height);
        double val = base;
        for (int k = 0; k < 3; ++k)
          val += a[k] * std::cos(2.0 * std::numbers::pi * (fx[k] * u + fy[k] * v) +
                                 ph[k]);
        img.set(x, y, c, val);
      }
    }
  }
  return img;
}

ImageBuffer synth_digit(std::uint64_t seed, int digit) {
  if (digit < 0 || digit > 9) throw ValidationError("digit must be 0..9");
  Rng rng(seed);

  // Seven-segment shapes in a unit box: A top, B/C right, D bottom,
  // E/F left, G middle.
  static const char* kSegments[10] = {
      "ABCDEF", "BC", "ABGED", "ABGCD", "FGBC",
      "AFGCD",  "AFGEDC", "ABC", "ABCDEFG", "ABCDFG"};
  auto segment = [](char name) -> Seg {
    switch (name) {
      case 'A': return {0.0, 0.0, 1.0, 0.0};
      case 'B': return {1.0, 0.0, 1.0, 0.5};
      case 'C': return {1.0, 0.5, 1.0, 1.0};
      case 'D': return {0.0, 1.0, 1.0, 1.0};
      case 'E': return {0.0, 0.5, 0.0, 1.0};
      case 'F': return {0.0, 0.0, 0.0, 0.5};
      default: return {0.0, 0.5, 1.0, 0.5};
    }
  };

  double shift_x = static_cast<double>(rng.range(-1, 1));
  double shift_y = static_cast<double>(rng.range(-1, 1));
  double thickness = rng.uniform(1.5, 2.0);
  double intensity = rng.uniform(205.0, 240.0);

  std::vector<Seg> segs;
  for (const char* p = kSegments[digit]; *p; ++p) {
    Seg s = segment(*p);
    // Box [9, 23] x [7, 25] in canvas pixels, with per-endpoint jitter.
    auto jx = [&](double t) {
      return 9.0 + 14.0 * t + shift_x + rng.uniform(-0.45, 0.45);
    };
    auto jy = [&](double t) {
      return 7.0 + 18.0 * t + shift_y + rng.uniform(-0.45, 0.45);
    };
    segs.push_back({jx(s.x0), jy(s.y0), jx(s.x1), jy(s.y1)});
  }

  ImageBuffer img = ImageBuffer::create(32, 32, 1);
  for (std::size_t y = 0; y < 32; ++y) {
    for (std::size_t x = 0; x < 32; ++x) {
      double px = static_cast<double>(x), py = static_cast<double>(y);
      double level = 0.0;
      for (const auto& s : segs) {
        double d = dist_to_segment(px, py, s);
        if (d < thickness)
          level = std::max(level, intensity * std::min(1.0, (thickness - d)));
      }
      level += rng.normal(0.0, 5.0);
      img.set_byte(x, y, 0,
                   static_cast<std::uint8_t>(std::clamp(level, 0.0, 255.0)));
    }
  }
  return img;
}

std::vector<double> synth_music(std::uint64_t seed, double seconds,
                                double sample_rate) {
  Rng rng(seed);
  auto n = static_cast<std::size_t>(seconds * sample_rate);
  std::vector<double> out(n, 0.0);
  // Pentatonic grid over two octaves.
  const double steps[] = {0, 2, 4, 7, 9, 12, 14, 16, 19, 21};
  const double slot = 0.15;
  for (double start = 0.0; start + slot < seconds; start += slot) {
    if (!rng.bernoulli(0.45)) continue;
    double freq = 220.0 * std::pow(2.0, steps[rng.below(10)] / 12.0);
    double amp = rng.uniform(0.15, 0.45);
    double dur = rng.uniform(0.2, 0.5);
    auto s0 = static_cast<std::size_t>(start * sample_rate);
    auto s1 = std::min(n, static_cast<std::size_t>((start + dur) * sample_rate));
    for (std::size_t t = s0; t < s1; ++t) {
      double dt = static_cast<double>(t - s0) / sample_rate;
      out[t] += amp * std::exp(-dt / 0.25) *
                std::sin(2.0 * std::numbers::pi * freq * dt);
    }
  }
  double peak = 1e-9;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (peak > 0.9)
    for (double& v : out) v *= 0.9 / peak;
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> center_blob(
    std::uint64_t seed, std::size_t width, std::size_t height,
    std::size_t count) {
  count = std::min(count, width * height);
  Rng rng(seed);
  std::vector<char> in_blob(width * height, 0);
  std::vector<std::pair<std::size_t, std::size_t>> blob;
  std::vector<std::pair<std::size_t, std::size_t>> frontier;

  auto push = [&](std::size_t x, std::size_t y) {
    if (in_blob[y * width + x]) return;
    in_blob[y * width + x] = 1;
    blob.emplace_back(x, y);
    if (x > 0) frontier.emplace_back(x - 1, y);
    if (x + 1 < width) frontier.emplace_back(x + 1, y);
    if (y > 0) frontier.emplace_back(x, y - 1);
    if (y + 1 < height) frontier.emplace_back(x, y + 1);
  };

  push(width / 2, height / 2);
  while (blob.size() < count && !frontier.empty()) {
    std::size_t pick = rng.below(frontier.size());
    auto [x, y] = frontier[pick];
    frontier[pick] = frontier.back();
    frontier.pop_back();
    push(x, y);
  }
  return blob;
}

void add_byte_noise(ImageBuffer& img, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& b : img.bytes) {
    double v = static_cast<double>(b) + rng.normal(0.0, sigma);
    b = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
}

}  // namespace mfn
