#include "mfn/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "mfn/detail/binio.hpp"
#include "mfn/io.hpp"

namespace mfn {

namespace {

std::size_t smallest_prime_factor(std::size_t n) {
  for (std::size_t p = 2; p * p <= n; ++p)
    if (n % p == 0) return p;
  return n;
}

void dft_direct(std::span<const Complex> in, std::span<Complex> out) {
  const std::size_t n = in.size();
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{0.0, 0.0};
    for (std::size_t t = 0; t < n; ++t) {
      double angle = -2.0 * std::numbers::pi *
                     static_cast<double>((k * t) % n) / static_cast<double>(n);
      acc += in[t] * std::polar(1.0, angle);
    }
    out[k] = acc;
  }
}

void dft_recursive(std::span<const Complex> in, std::span<Complex> out) {
  const std::size_t n = in.size();
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  std::size_t p = smallest_prime_factor(n);
  if (p == n || n <= 8) {
    dft_direct(in, out);
    return;
  }
  const std::size_t m = n / p;
  // Decimate in time into p interleaved subsequences.
  std::vector<Complex> scratch(n), sub(n);
  for (std::size_t r = 0; r < p; ++r) {
    std::vector<Complex> part(m);
    for (std::size_t t = 0; t < m; ++t) part[t] = in[t * p + r];
    dft_recursive(part, std::span<Complex>(sub.data() + r * m, m));
  }
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{0.0, 0.0};
    for (std::size_t r = 0; r < p; ++r) {
      double angle = -2.0 * std::numbers::pi *
                     static_cast<double>((r * k) % n) / static_cast<double>(n);
      acc += sub[r * m + k % m] * std::polar(1.0, angle);
    }
    scratch[k] = acc;
  }
  std::copy(scratch.begin(), scratch.end(), out.begin());
}

}  // namespace

std::vector<Complex> dft(std::span<const Complex> input) {
  if (input.empty()) throw ValidationError("dft needs at least one sample");
  std::vector<Complex> out(input.size());
  dft_recursive(input, out);
  return out;
}

Spectrogram stft(std::span<const double> samples, double sample_rate,
                 double frame_ms, double hop_ms) {
  if (!(sample_rate > 0.0)) throw ValidationError("sample rate must be positive");
  const auto frame_len =
      static_cast<std::size_t>(std::llround(sample_rate * frame_ms / 1000.0));
  const auto hop_len =
      static_cast<std::size_t>(std::llround(sample_rate * hop_ms / 1000.0));
  if (frame_len < 2 || hop_len < 1)
    throw ValidationError("frame or hop too short at this sample rate");
  if (samples.size() < frame_len)
    throw ValidationError("input shorter than one frame");

  const std::size_t n_frames = 1 + (samples.size() - frame_len) / hop_len;
  const std::size_t n_freqs = frame_len / 2 + 1;

  std::vector<double> window(frame_len);
  for (std::size_t k = 0; k < frame_len; ++k)
    window[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi *
                                      static_cast<double>(k) /
                                      static_cast<double>(frame_len - 1)));

  Spectrogram s;
  s.n_bins = n_freqs;
  s.n_frames = n_frames;
  s.sample_rate = sample_rate;
  s.frame_ms = frame_ms;
  s.hop_ms = hop_ms;
  s.data.resize(n_freqs * n_frames);
  s.bin_edges.resize(n_freqs + 1);
  for (std::size_t j = 0; j <= n_freqs; ++j)
    s.bin_edges[j] = static_cast<std::uint32_t>(j);

  std::vector<Complex> frame(frame_len);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const double* base = samples.data() + f * hop_len;
    for (std::size_t k = 0; k < frame_len; ++k)
      frame[k] = Complex{base[k] * window[k], 0.0};
    std::vector<Complex> spectrum = dft(frame);
    for (std::size_t k = 0; k < n_freqs; ++k) s.at(k, f) = spectrum[k];
  }
  return s;
}

namespace {

/// Total frequencies claimed by n_bins logarithmic bins at growth rate a.
std::size_t binned_total(double a, std::size_t n_bins, std::size_t cap) {
  std::size_t total = 0;
  for (std::size_t j = 1; j <= n_bins; ++j) {
    double size = std::floor(std::exp(a * static_cast<double>(j)));
    if (size > static_cast<double>(cap)) return cap + 1;
    total += static_cast<std::size_t>(size);
    if (total > cap) return cap + 1;
  }
  return total;
}

}  // namespace

Spectrogram log_bin(const Spectrogram& full, std::size_t n_bins) {
  const std::size_t n_f = full.n_bins;
  if (n_bins > n_f)
    throw ValidationError("cannot bin into more bins than frequencies");
  if (n_bins == 0) throw ValidationError("need at least one bin");

  // Largest growth rate whose total stays within the frequency count.
  double lo = 1e-12, hi = 1.0;
  while (binned_total(hi, n_bins, n_f) <= n_f) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (binned_total(mid, n_bins, n_f) <= n_f)
      lo = mid;
    else
      hi = mid;
  }

  std::vector<std::size_t> sizes(n_bins);
  std::size_t total = 0;
  for (std::size_t j = 1; j <= n_bins; ++j) {
    sizes[j - 1] = static_cast<std::size_t>(
        std::floor(std::exp(lo * static_cast<double>(j))));
    total += sizes[j - 1];
  }
  // Leftover high frequencies join the last (largest) bin.
  sizes[n_bins - 1] += n_f - total;

  Spectrogram out;
  out.n_bins = n_bins;
  out.n_frames = full.n_frames;
  out.sample_rate = full.sample_rate;
  out.frame_ms = full.frame_ms;
  out.hop_ms = full.hop_ms;
  out.data.assign(n_bins * full.n_frames, Complex{0.0, 0.0});
  out.bin_edges.resize(n_bins + 1);
  out.bin_edges[0] = 0;
  for (std::size_t j = 0; j < n_bins; ++j)
    out.bin_edges[j + 1] =
        out.bin_edges[j] + static_cast<std::uint32_t>(sizes[j]);

  for (std::size_t f = 0; f < full.n_frames; ++f) {
    for (std::size_t j = 0; j < n_bins; ++j) {
      Complex acc{0.0, 0.0};
      for (std::uint32_t r = out.bin_edges[j]; r < out.bin_edges[j + 1]; ++r)
        acc += full.at(r, f);
      out.at(j, f) = acc;
    }
  }
  return out;
}

double unbin_magnitude_mse(const Spectrogram& a, const Spectrogram& b) {
  if (a.n_bins != b.n_bins || a.n_frames != b.n_frames ||
      a.sample_rate != b.sample_rate || a.bin_edges != b.bin_edges)
    throw ValidationError("spectrogram shapes or metadata disagree");
  double total = 0.0;
  for (std::size_t k = 0; k < a.data.size(); ++k)
    total += std::norm(a.data[k] - b.data[k]);
  return total / static_cast<double>(a.data.size());
}

namespace {

std::uint32_t read_u32(std::istream& in) {
  std::uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in) {
  std::uint8_t b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

}  // namespace

std::vector<double> read_wav(const std::string& path, double* sample_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0)
    throw IoError("not a RIFF file: " + path);
  read_u32(in);
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0)
    throw IoError("not a WAVE file: " + path);

  bool got_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::vector<double> samples;
  while (in.read(tag, 4)) {
    std::uint32_t size = read_u32(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      std::uint16_t format = read_u16(in);
      channels = read_u16(in);
      rate = read_u32(in);
      read_u32(in);
      read_u16(in);
      bits = read_u16(in);
      if (size > 16) in.seekg(size - 16, std::ios::cur);
      if (format != 1) throw IoError("only PCM wav is supported: " + path);
      if (channels != 1)
        throw IoError("stereo input is not supported; convert to mono: " +
                      path);
      if (bits != 16) throw IoError("only 16-bit wav is supported: " + path);
      got_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!got_fmt) throw IoError("wav data before fmt chunk: " + path);
      std::size_t count = size / 2;
      samples.resize(count);
      for (std::size_t k = 0; k < count; ++k) {
        std::uint8_t b[2];
        in.read(reinterpret_cast<char*>(b), 2);
        if (!in) throw IoError("truncated wav data: " + path);
        auto v = static_cast<std::int16_t>(b[0] | (b[1] << 8));
        samples[k] = static_cast<double>(v) / 32768.0;
      }
      break;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }
  if (!got_fmt || samples.empty())
    throw IoError("wav has no sample data: " + path);
  if (sample_rate) *sample_rate = static_cast<double>(rate);
  return samples;
}

void write_wav(const std::string& path, std::span<const double> samples,
               double sample_rate) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  auto put_u32 = [&](std::uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                 static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    out.write(b, 4);
  };
  auto put_u16 = [&](std::uint16_t v) {
    char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
    out.write(b, 2);
  };
  std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(1);
  put_u16(1);
  auto rate = static_cast<std::uint32_t>(sample_rate);
  put_u32(rate);
  put_u32(rate * 2);
  put_u16(2);
  put_u16(16);
  out.write("data", 4);
  put_u32(data_bytes);
  for (double s : samples) {
    double clamped = std::clamp(s, -1.0, 32767.0 / 32768.0);
    auto v = static_cast<std::int16_t>(std::lround(clamped * 32768.0));
    put_u16(static_cast<std::uint16_t>(v));
  }
}

namespace {
constexpr char kSpecMagic[8] = {'M', 'F', 'N', 'S', 'P', 'G', '0', '1'};
constexpr std::uint32_t kSpecVersion = 1;
}  // namespace

void save_spectrogram(const Spectrogram& s, const std::string& path) {
  detail::BinWriter w;
  w.magic(kSpecMagic);
  w.u32(kSpecVersion);
  w.u64(s.n_bins);
  w.u64(s.n_frames);
  w.f64(s.sample_rate);
  w.f64(s.frame_ms);
  w.f64(s.hop_ms);
  w.u64(s.bin_edges.size());
  for (auto e : s.bin_edges) w.u32(e);
  for (const auto& c : s.data) {
    w.f64(c.real());
    w.f64(c.imag());
  }
  w.commit(path);
}

Spectrogram load_spectrogram(const std::string& path) {
  detail::BinReader r(path);
  r.expect_magic(kSpecMagic);
  if (r.u32() != kSpecVersion)
    throw IoError("unsupported spectrogram version: " + path);
  Spectrogram s;
  s.n_bins = r.u64();
  s.n_frames = r.u64();
  s.sample_rate = r.f64();
  s.frame_ms = r.f64();
  s.hop_ms = r.f64();
  s.bin_edges.resize(r.u64());
  for (auto& e : s.bin_edges) e = r.u32();
  s.data.resize(s.n_bins * s.n_frames);
  for (auto& c : s.data) {
    double re = r.f64(), im = r.f64();
    c = Complex{re, im};
  }
  return s;
}

void export_magnitude_csv(const Spectrogram& s, const std::string& path) {
  Matrix m(s.n_bins, std::vector<double>(s.n_frames));
  for (std::size_t b = 0; b < s.n_bins; ++b)
    for (std::size_t f = 0; f < s.n_frames; ++f)
      m[b][f] = std::abs(s.at(b, f));
  write_csv_matrix(m, path);
}

}  // namespace mfn
