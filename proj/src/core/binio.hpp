#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace lnadapt {

// Little-endian binary writer/reader. This code assumes a little-endian
// host (checked at startup of file ops).
inline void require_little_endian() {
  const std::uint32_t probe = 1;
  unsigned char b;
  std::memcpy(&b, &probe, 1);
  if (b != 1) throw IoError("big-endian hosts are not supported by the file formats");
}

class BinWriter {
 public:
  explicit BinWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    require_little_endian();
    if (!out_) throw IoError("cannot open for writing: " + path);
  }

  void raw(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void f64_array(const double* p, std::size_t n) { raw(p, 8 * n); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }

  void close() {
    out_.close();
    if (!out_) throw IoError("write failed: " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    require_little_endian();
    if (!in_) throw IoError("cannot open for reading: " + path);
  }

  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw IoError("parse error in " + path_ + " at byte " + std::to_string(offset_));
    }
    offset_ += n;
  }
  std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, 8); return v; }
  double f64() { double v; raw(&v, 8); return v; }
  void f64_array(double* p, std::size_t n) { raw(p, 8 * n); }
  std::string str(std::size_t max_len = 1 << 20) {
    std::uint32_t n = u32();
    if (n > max_len) {
      throw IoError("parse error in " + path_ + " at byte " + std::to_string(offset_ - 4) +
                    " (string length " + std::to_string(n) + " out of range)");
    }
    std::string s(n, '\0');
    if (n > 0) raw(s.data(), n);
    return s;
  }
  std::size_t offset() const { return offset_; }

  bool at_eof() {
    return in_.peek() == std::char_traits<char>::eof();
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t offset_ = 0;
};

}  // namespace lnadapt
