#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace coinlab {

using Bytes = std::vector<std::uint8_t>;

struct MalformedMessage : std::runtime_error {
  MalformedMessage() : std::runtime_error("malformed message") {}
};

// Little-endian fixed-width encoding; readers throw MalformedMessage on any
// truncation so handlers can drop garbage in one place.
class Writer {
 public:
  Writer& u8(std::uint8_t v) {
    out_.push_back(v);
    return *this;
  }
  Writer& u32(std::uint32_t v) { return fixed(v, 4); }
  Writer& u64(std::uint64_t v) { return fixed(v, 8); }
  Writer& raw(std::span<const std::uint8_t> b) {
    out_.insert(out_.end(), b.begin(), b.end());
    return *this;
  }
  Writer& blob(std::span<const std::uint8_t> b) {
    u32(static_cast<std::uint32_t>(b.size()));
    return raw(b);
  }
  Bytes take() { return std::move(out_); }

 private:
  Writer& fixed(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(fixed(4)); }
  std::uint64_t u64() { return fixed(8); }
  std::span<const std::uint8_t> raw(std::size_t len) {
    need(len);
    auto s = in_.subspan(pos_, len);
    pos_ += len;
    return s;
  }
  Bytes blob() {
    auto len = u32();
    auto s = raw(len);
    return Bytes(s.begin(), s.end());
  }
  bool done() const { return pos_ == in_.size(); }
  void expect_done() const {
    if (!done()) throw MalformedMessage();
  }

 private:
  void need(std::size_t len) const {
    if (in_.size() - pos_ < len) throw MalformedMessage();
  }
  std::uint64_t fixed(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace coinlab
