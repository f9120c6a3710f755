#pragma once

// Little-endian encoding helpers shared by the segment and checkpoint formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "oratory/error.hpp"

namespace oratory::io {

class LeWriter {
 public:
  explicit LeWriter(std::ostream& os) : os_(os) {}

  template <typename U>
  void uint(U v) {
    unsigned char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    os_.write(reinterpret_cast<const char*>(buf), sizeof(U));
  }
  void u8(std::uint8_t v) { uint(v); }
  void u16(std::uint16_t v) { uint(v); }
  void u32(std::uint32_t v) { uint(v); }
  void u64(std::uint64_t v) { uint(v); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  template <typename T>
  void f32s(std::span<const T> values) {
    std::vector<unsigned char> buf(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
      for (int b = 0; b < 4; ++b) buf[i * 4 + b] = static_cast<unsigned char>(bits >> (8 * b));
    }
    os_.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
  void bytes(std::string_view s) { os_.write(s.data(), static_cast<std::streamsize>(s.size())); }

  bool good() const { return os_.good(); }

 private:
  std::ostream& os_;
};

class LeReader {
 public:
  LeReader(std::istream& is, std::string what) : is_(is), what_(std::move(what)) {}

  template <typename U>
  U uint() {
    unsigned char buf[sizeof(U)];
    read_raw(buf, sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(buf[i]) << (8 * i));
    return v;
  }
  std::uint8_t u8() { return uint<std::uint8_t>(); }
  std::uint16_t u16() { return uint<std::uint16_t>(); }
  std::uint32_t u32() { return uint<std::uint32_t>(); }
  std::uint64_t u64() { return uint<std::uint64_t>(); }

  template <typename T>
  void f32s(std::span<T> out) {
    std::vector<unsigned char> buf(out.size() * 4);
    read_raw(buf.data(), buf.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(buf[i * 4 + b]) << (8 * b);
      out[i] = static_cast<T>(std::bit_cast<float>(bits));
    }
  }
  std::string bytes(std::size_t n) {
    std::string s(n, '\0');
    read_raw(s.data(), n);
    return s;
  }

  bool at_end() { return is_.peek() == std::char_traits<char>::eof(); }

 private:
  void read_raw(void* dst, std::size_t n) {
    is_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) {
      throw FormatError(what_ + ": truncated payload");
    }
  }

  std::istream& is_;
  std::string what_;
};

}  // namespace oratory::io
