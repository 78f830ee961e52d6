#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "sarforge/common.hpp"

// Little-endian primitives, written byte by byte so file layouts are
// identical regardless of host endianness.

namespace sarforge {

class ByteWriter {
 public:
  explicit ByteWriter(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { put(&v, 1); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const void* p, std::size_t n) { put(p, n); }
  std::uint64_t offset() const { return offset_; }

 private:
  void put(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    offset_ += n;
  }
  void put_le(std::uint64_t v, int n) {
    unsigned char buf[8];
    for (int i = 0; i < n; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    put(buf, static_cast<std::size_t>(n));
  }

  std::ostream& out_;
  std::uint64_t offset_ = 0;
};

class ByteReader {
 public:
  explicit ByteReader(std::istream& in, std::string name = "") : in_(in), name_(std::move(name)) {}

  std::uint8_t u8() {
    std::uint8_t v;
    get(&v, 1);
    return v;
  }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void bytes(void* p, std::size_t n) { get(p, n); }
  std::uint64_t offset() const { return offset_; }

  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(name_.empty() ? what : name_ + ": " + what, offset_);
  }

 private:
  void get(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail("unexpected end of file");
    offset_ += n;
  }
  std::uint64_t get_le(int n) {
    unsigned char buf[8];
    get(buf, static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }

  std::istream& in_;
  std::string name_;
  std::uint64_t offset_ = 0;
};

}  // namespace sarforge
