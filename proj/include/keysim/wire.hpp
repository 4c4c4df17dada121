#pragma once

// Big-endian binary encoding for the value types, used by transcript dumps
// and reproducibility snapshots.

#include <bit>
#include <cstdint>
#include <string>

#include "keysim/domain.hpp"

namespace keysim {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void blob16(ByteView b) {
    if (b.size() > 0xffff) throw Error("field longer than 65535 bytes");
    u16(static_cast<std::uint16_t>(b.size()));
    bytes(b);
  }
  void location(const Location& p) {
    f64(p.x);
    f64(p.y);
  }

  Bytes take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int width) {
    for (int shift = 8 * (width - 1); shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  Bytes bytes(std::size_t n) {
    need(n);
    Bytes out(in_.begin() + static_cast<std::ptrdiff_t>(pos_), in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }
  Bytes blob16() { return bytes(u16()); }
  Location location() {
    const double x = f64();
    const double y = f64();
    return {x, y};
  }

  bool done() const { return pos_ == in_.size(); }
  void expect_done() const {
    if (!done()) throw DecodeError("trailing bytes after message");
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw DecodeError("truncated input");
  }
  std::uint64_t get(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v = v << 8 | in_[pos_++];
    return v;
  }

  ByteView in_;
  std::size_t pos_ = 0;
};

Bytes encode(const Location& p);
Bytes encode(const KeyUnit& unit);
Bytes encode(const KeyPool& pool);
Bytes encode(const LinkKey& key);
/// Unit ids and ranked high-priority list; the pool travels separately.
Bytes encode(const KeyRing& ring);

Location decode_location(ByteView bytes);
KeyUnit decode_key_unit(ByteView bytes);
KeyPool decode_key_pool(ByteView bytes);
LinkKey decode_link_key(ByteView bytes);
KeyRing decode_key_ring(ByteView bytes, PoolHandle pool);

}  // namespace keysim
