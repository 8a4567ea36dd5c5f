#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "coinlab/math/dyadic.hpp"

namespace coinlab {

using BigFloat = boost::multiprecision::cpp_bin_float_50;

inline std::uint64_t ring_distance(std::uint64_t q, std::uint64_t x, std::uint64_t y) {
  if (q < 2) throw std::invalid_argument("ring size must be at least 2");
  if (x >= q || y >= q) throw std::invalid_argument("ring element out of range");
  std::uint64_t d = x > y ? x - y : y - x;
  return std::min(d, q - d);
}

// Exact parse of "0.05", "3", "2/3" or "1e-3".
inline Rational parse_rational(const std::string& text) {
  auto slash = text.find('/');
  if (slash != std::string::npos)
    return parse_rational(text.substr(0, slash)) / parse_rational(text.substr(slash + 1));
  std::string mant = text;
  long exp10 = 0;
  auto e = text.find_first_of("eE");
  if (e != std::string::npos) {
    mant = text.substr(0, e);
    exp10 = std::stol(text.substr(e + 1));
  }
  bool neg = !mant.empty() && mant[0] == '-';
  if (neg || (!mant.empty() && mant[0] == '+')) mant = mant.substr(1);
  auto dot = mant.find('.');
  std::string digits = mant;
  if (dot != std::string::npos) {
    exp10 -= static_cast<long>(mant.size() - dot - 1);
    digits = mant.substr(0, dot) + mant.substr(dot + 1);
  }
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
    throw std::invalid_argument("not a number: " + text);
  // cpp_int reads a leading 0 as octal.
  auto nz = digits.find_first_not_of('0');
  BigInt num(nz == std::string::npos ? std::string("0") : digits.substr(nz));
  BigInt ten_pow = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(std::abs(exp10)));
  Rational r = exp10 >= 0 ? Rational(num * ten_pow) : Rational(num, ten_pow);
  return neg ? Rational(-r) : r;
}

inline double to_double(const Rational& r) { return static_cast<double>(r); }

// floor(2 / (1 - delta)) for delta in (0, 1).
inline std::uint64_t reduction_factor(const Rational& delta) {
  if (delta <= 0 || delta >= 1) throw std::invalid_argument("delta must be in (0, 1)");
  Rational x = Rational(2) / (Rational(1) - delta);
  BigInt k = boost::multiprecision::numerator(x) / boost::multiprecision::denominator(x);
  if (k < 2) throw std::invalid_argument("reduction factor below 2");
  return static_cast<std::uint64_t>(k);
}

// ceil(log2(x)) for rational x > 0, exact.
inline long ceil_log2(const Rational& x) {
  if (x <= 0) throw std::invalid_argument("log of non-positive");
  long r = 0;
  Rational p(1);
  if (p >= x) {
    while (p / 2 >= x) {
      p /= 2;
      --r;
    }
    return r;
  }
  while (p < x) {
    p *= 2;
    ++r;
  }
  return r;
}

// Rounds of approximate agreement for the approximate coin: smallest r with
// 2^-r <= eps / f.
inline std::size_t approx_rounds(const Rational& eps, std::size_t f) {
  if (eps <= 0 || eps > 1) throw std::invalid_argument("epsilon must be in (0, 1]");
  long r = ceil_log2(Rational(static_cast<long>(std::max<std::size_t>(f, 1))) / eps);
  return static_cast<std::size_t>(std::max(0L, r));
}

inline BigFloat ln_big(const BigFloat& x) { return boost::multiprecision::log(x); }
inline BigFloat log2_big(const BigFloat& x) { return boost::multiprecision::log(x) / boost::multiprecision::log(BigFloat(2)); }

// v = 1 - ln(2/Q) / (2n/3)
inline BigFloat compute_v(std::size_t n, const BigFloat& q) {
  if (q <= 0 || q >= 1) throw std::invalid_argument("Q must be in (0, 1)");
  return BigFloat(1) - ln_big(BigFloat(2) / q) / (BigFloat(2 * n) / 3);
}

inline bool calibration_allowed(std::size_t n, const BigFloat& q) {
  return BigFloat(n) > BigFloat(3) * ln_big(BigFloat(2) / q) / 2;
}

enum class CalibrationMode { uncalibrated, calibrated };

struct RoundsPlan {
  std::size_t rounds;
  CalibrationMode mode;
  bool fell_back;
};

// ceil with a guard against values that are integers up to rounding noise.
inline long ceil_tolerant(const BigFloat& x) {
  BigFloat nearest = boost::multiprecision::round(x);
  if (boost::multiprecision::abs(x - nearest) < BigFloat("1e-40")) return static_cast<long>(nearest);
  return static_cast<long>(boost::multiprecision::ceil(x));
}

inline RoundsPlan rounds_for(CalibrationMode mode, std::size_t n, const BigFloat& q) {
  if (q <= 0 || q >= 1) throw std::invalid_argument("Q must be in (0, 1)");
  const BigFloat inv_q = BigFloat(1) / q;
  bool fell_back = false;
  if (mode == CalibrationMode::calibrated && !calibration_allowed(n, q)) {
    mode = CalibrationMode::uncalibrated;
    fell_back = true;
  }
  long r;
  if (mode == CalibrationMode::uncalibrated) {
    r = 3 + ceil_tolerant(log2_big(BigFloat(n)) + log2_big(inv_q));
  } else {
    BigFloat l = log2_big(inv_q);
    r = 5 + ceil_tolerant(l + (l > 0 ? log2_big(l) : BigFloat(0)));
  }
  return RoundsPlan{static_cast<std::size_t>(std::max(0L, r)), mode, fell_back};
}

// Piecewise-linear weight map: 0 -> 0, eps -> v, 1 -> 1.
inline Rational calibrate(const Rational& w, const Rational& eps, const Rational& v) {
  if (w < 0 || w > 1) throw std::invalid_argument("weight out of range");
  if (w == 0) return Rational(0);
  if (eps >= 1) throw std::invalid_argument("calibration needs eps < 1");
  return (w - eps) / (Rational(1) - eps) + (Rational(1) - w) / (Rational(1) - eps) * v;
}

inline double calibrate(double w, double eps, double v) {
  if (w == 0) return 0.0;
  return (w - eps) / (1 - eps) + (1 - w) / (1 - eps) * v;
}

// Rounds a real in (0,1) down to a multiple of 2^-bits, as an exact rational.
inline Rational dyadic_round(const BigFloat& x, unsigned bits = 40) {
  BigFloat scaled = boost::multiprecision::floor(x * boost::multiprecision::pow(BigFloat(2), bits));
  return Rational(BigInt(scaled.convert_to<BigInt>()), BigInt(1) << bits);
}

// Failure bound of the uncalibrated direct coin with disagreement eps.
inline double uncalibrated_bound(std::size_t n, double eps) { return std::min(1.0, 8.0 * static_cast<double>(n) * eps); }

// Calibrated chain Q/2 + 9 eps log2(2/Q), minimised over the admissible Q
// (calibration must be allowed for Q, and eps <= 1/16), clipped to 1.
inline double calibrated_bound(std::size_t n, double eps) {
  if (eps > 1.0 / 16) return 1.0;
  double q_min = 2.0 * std::exp(-2.0 * static_cast<double>(n) / 3.0);
  double q = std::clamp(18.0 * eps / std::log(2.0), q_min * (1 + 1e-12), 1.0 - 1e-12);
  double b = q / 2 + 9 * eps * std::log2(2 / q);
  return std::min(1.0, b);
}

inline double ideal_failure(unsigned r) { return std::ldexp(1.0 / 3.0, -static_cast<int>(r)); }

}  // namespace coinlab
