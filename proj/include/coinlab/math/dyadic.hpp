#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace coinlab {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Exact value numerator / 2^exponent in [0, 1], kept normalized (odd
// numerator, or zero with exponent 0).
class Dyadic {
 public:
  static constexpr unsigned kMaxExponent = 62;

  constexpr Dyadic() = default;
  static Dyadic zero() { return Dyadic(); }
  static Dyadic one() { return make(1, 0); }

  static Dyadic make(std::uint64_t numerator, unsigned exponent) {
    if (exponent > kMaxExponent) throw std::out_of_range("dyadic exponent too large");
    if (numerator > (std::uint64_t{1} << exponent)) throw std::out_of_range("dyadic above one");
    Dyadic d;
    d.num_ = numerator;
    d.exp_ = exponent;
    d.normalize();
    return d;
  }

  std::uint64_t numerator() const { return num_; }
  unsigned exponent() const { return exp_; }
  bool is_zero() const { return num_ == 0; }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(std::uint64_t{1} << exp_); }
  Rational to_rational() const { return Rational(BigInt(num_), BigInt(1) << exp_); }

  friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
    unsigned e = std::max(a.exp_, b.exp_);
    return (a.num_ << (e - a.exp_)) <=> (b.num_ << (e - b.exp_));
  }
  friend bool operator==(const Dyadic& a, const Dyadic& b) { return a.num_ == b.num_ && a.exp_ == b.exp_; }

  friend Dyadic midpoint(const Dyadic& a, const Dyadic& b) {
    unsigned e = std::max(a.exp_, b.exp_);
    std::uint64_t sum = (a.num_ << (e - a.exp_)) + (b.num_ << (e - b.exp_));
    return make(sum, e + 1);
  }

  // |a - b|
  friend Dyadic distance(const Dyadic& a, const Dyadic& b) {
    unsigned e = std::max(a.exp_, b.exp_);
    std::uint64_t x = a.num_ << (e - a.exp_), y = b.num_ << (e - b.exp_);
    return make(x > y ? x - y : y - x, e);
  }

  std::string to_string() const { return std::to_string(num_) + "/2^" + std::to_string(exp_); }

 private:
  void normalize() {
    if (num_ == 0) {
      exp_ = 0;
      return;
    }
    while (exp_ > 0 && (num_ & 1) == 0) {
      num_ >>= 1;
      --exp_;
    }
  }

  std::uint64_t num_ = 0;
  unsigned exp_ = 0;
};

using WeightVector = std::vector<Dyadic>;

// Drops the f smallest and f largest values and returns the midpoint of the
// rest.
inline Dyadic trim_midpoint(std::vector<Dyadic> values, std::size_t f) {
  if (values.size() < 2 * f + 1) throw std::invalid_argument("trim_midpoint needs at least 2f+1 values");
  std::sort(values.begin(), values.end());
  return midpoint(values[f], values[values.size() - 1 - f]);
}

}  // namespace coinlab
