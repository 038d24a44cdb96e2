#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mfn/types.hpp"

namespace mfn::detail {

/// Little-endian binary buffer with an FNV-1a checksum trailer. All model
/// and spectrogram payload files share this envelope.
class BinWriter {
 public:
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void i32(std::int32_t v) { raw(&v, 4); }
  void i64(std::int64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void magic(const char tag[8]) { raw(tag, 8); }

  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }

  static std::uint64_t fnv1a(const std::uint8_t* p, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  /// Append the checksum and write the file.
  void commit(const std::string& path) {
    std::uint64_t sum = fnv1a(buf_.data(), buf_.size());
    u64(sum);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(buf_.data()),
              static_cast<std::streamsize>(buf_.size()));
    if (!out) throw IoError("short write: " + path);
  }

 private:
  std::vector<std::uint8_t> buf_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    buf_.assign(std::istreambuf_iterator<char>(in),
                std::istreambuf_iterator<char>());
    if (buf_.size() < 16) throw IoError("file truncated: " + path);
    std::uint64_t stored;
    std::memcpy(&stored, buf_.data() + buf_.size() - 8, 8);
    std::uint64_t actual = BinWriter::fnv1a(
        reinterpret_cast<const std::uint8_t*>(buf_.data()), buf_.size() - 8);
    if (stored != actual) throw IoError("checksum mismatch: " + path);
    end_ = buf_.size() - 8;
  }

  void expect_magic(const char tag[8]) {
    char got[8];
    raw(got, 8);
    if (std::memcmp(got, tag, 8) != 0)
      throw IoError("bad file magic: " + path_);
  }

  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::int32_t i32() { return get<std::int32_t>(); }
  std::int64_t i64() { return get<std::int64_t>(); }
  double f64() { return get<double>(); }

  void raw(void* p, std::size_t n) {
    if (pos_ + n > end_) throw IoError("file truncated: " + path_);
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }

  bool exhausted() const { return pos_ == end_; }

 private:
  template <typename T>
  T get() {
    T v;
    raw(&v, sizeof(T));
    return v;
  }

  std::string path_;
  std::vector<char> buf_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
};

}  // namespace mfn::detail
