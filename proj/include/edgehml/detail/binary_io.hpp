#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace edgehml::detail {

// Explicit little-endian encoding so files are portable across hosts.
class ByteWriter {
 public:
  explicit ByteWriter(std::size_t reserve = 0) { buf_.reserve(reserve); }

  template <typename U>
  void put_uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void put_f32(float f) { put_uint(std::bit_cast<std::uint32_t>(f)); }
  void put_bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void put_zeros(std::size_t n) { buf_.insert(buf_.end(), n, 0); }

  const std::vector<std::uint8_t>& bytes() const { return buf_; }
  const char* data() const { return reinterpret_cast<const char*>(buf_.data()); }
  std::size_t size() const { return buf_.size(); }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : buf_(b) {}

  template <typename U>
  U get_uint() {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(buf_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }
  float get_f32() { return std::bit_cast<float>(get_uint<std::uint32_t>()); }
  std::span<const std::uint8_t> get_bytes(std::size_t n) {
    auto s = buf_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  void skip(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

}  // namespace edgehml::detail
