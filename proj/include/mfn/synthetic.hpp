#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mfn/io.hpp"

namespace mfn {

/// Aligned synthetic face: skin tone, eyes, and mouth at fixed positions
/// with seeded per-sample variation. Any size >= 12x12.
ImageBuffer synth_face(std::uint64_t seed, std::size_t width,
                       std::size_t height);

/// Smooth low-frequency RGB texture; the stored-image corpus for the
/// restoration benchmark.
ImageBuffer synth_texture(std::uint64_t seed, std::size_t width,
                          std::size_t height);

/// 32x32 gray stroke-drawn digit with seeded jitter (translation, stroke
/// endpoints, intensity).
ImageBuffer synth_digit(std::uint64_t seed, int digit);

/// Random tone-grid clip: decaying sinusoids on a fixed scale.
std::vector<double> synth_music(std::uint64_t seed, double seconds,
                                double sample_rate);

/// Connected pixel blob grown from the image center, exactly `count`
/// pixels, deterministic per seed.
std::vector<std::pair<std::size_t, std::size_t>> center_blob(
    std::uint64_t seed, std::size_t width, std::size_t height,
    std::size_t count);

/// Per-channel Gaussian noise on the byte scale, clamped to [0, 255].
void add_byte_noise(ImageBuffer& img, double sigma, std::uint64_t seed);

}  // namespace mfn
