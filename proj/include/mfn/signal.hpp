#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mfn/types.hpp"

namespace mfn {

/// Complex time-frequency matrix: rows are frequency bins, columns frames.
struct Spectrogram {
  std::size_t n_bins = 0;
  std::size_t n_frames = 0;
  std::vector<Complex> data;  // row-major, bins x frames
  double sample_rate = 0.0;
  double frame_ms = 0.0;
  double hop_ms = 0.0;
  /// bin_edges[j]..bin_edges[j+1] are the raw frequency rows summed into
  /// bin j; identity when no binning was applied.
  std::vector<std::uint32_t> bin_edges;

  Complex& at(std::size_t bin, std::size_t frame) {
    return data[bin * n_frames + frame];
  }
  const Complex& at(std::size_t bin, std::size_t frame) const {
    return data[bin * n_frames + frame];
  }
};

/// Unnormalized forward DFT (mixed-radix; any length, prime lengths fall
/// back to the direct transform).
std::vector<Complex> dft(std::span<const Complex> input);

/// Hanning-windowed short-time transform keeping the L/2 + 1 nonnegative
/// frequencies per frame. Frame and hop lengths derive from the sample rate.
Spectrogram stft(std::span<const double> samples, double sample_rate,
                 double frame_ms = 50.0, double hop_ms = 25.0);

/// Group frequencies into n_bins logarithmically sized bins: sizes
/// floor(e^(j a)) with the largest feasible a, remainder appended to the
/// last bin. Bin values are the complex sums of their member rows.
Spectrogram log_bin(const Spectrogram& full, std::size_t n_bins = 400);

/// Mean of |a - b|^2 over all cells. Shapes and metadata must agree.
double unbin_magnitude_mse(const Spectrogram& a, const Spectrogram& b);

/// 16-bit PCM mono WAV.
std::vector<double> read_wav(const std::string& path, double* sample_rate);
void write_wav(const std::string& path, std::span<const double> samples,
               double sample_rate);

/// Checksummed binary spectrogram file plus a CSV magnitude export.
void save_spectrogram(const Spectrogram& s, const std::string& path);
Spectrogram load_spectrogram(const std::string& path);
void export_magnitude_csv(const Spectrogram& s, const std::string& path);

}  // namespace mfn
