#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace coinlab {

// Arithmetic modulo an odd prime below 2^63.
struct ModArith {
  std::uint64_t modulus;

  std::uint64_t add(std::uint64_t a, std::uint64_t b) const {
    std::uint64_t s = a + b;
    return s >= modulus ? s - modulus : s;
  }
  std::uint64_t sub(std::uint64_t a, std::uint64_t b) const { return a >= b ? a - b : a + modulus - b; }
  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % modulus);
  }
  std::uint64_t pow(std::uint64_t base, std::uint64_t e) const {
    std::uint64_t r = 1 % modulus;
    base %= modulus;
    while (e) {
      if (e & 1) r = mul(r, base);
      base = mul(base, base);
      e >>= 1;
    }
    return r;
  }
  std::uint64_t inv(std::uint64_t a) const {
    if (a % modulus == 0) throw std::domain_error("inverse of zero");
    return pow(a, modulus - 2);
  }
};

inline constexpr std::uint64_t kFieldPrime = (std::uint64_t{1} << 61) - 1;

struct FieldElement {
  std::uint64_t value = 0;

  static FieldElement from(std::uint64_t v) { return FieldElement{v % kFieldPrime}; }
  bool operator==(const FieldElement&) const = default;
};

inline constexpr ModArith kField{kFieldPrime};

// Polynomial with coefficients low to high, evaluated at x.
inline std::uint64_t eval_poly(const std::vector<std::uint64_t>& coeffs, std::uint64_t x, const ModArith& m) {
  std::uint64_t acc = 0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = m.add(m.mul(acc, x), *it);
  return acc;
}

// Shares at x = 1..n.
inline std::vector<std::uint64_t> make_shares(const std::vector<std::uint64_t>& coeffs, std::size_t n,
                                              const ModArith& m) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t x = 1; x <= n; ++x) out.push_back(eval_poly(coeffs, x, m));
  return out;
}

// Lagrange interpolation of the value at zero from distinct (x, y) points.
inline std::uint64_t interpolate_at_zero(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& points,
                                         const ModArith& m) {
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::uint64_t num = 1, den = 1;
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (i == j) continue;
      num = m.mul(num, m.sub(0, points[j].first));
      den = m.mul(den, m.sub(points[i].first, points[j].first));
    }
    acc = m.add(acc, m.mul(points[i].second, m.mul(num, m.inv(den))));
  }
  return acc;
}

// Discrete-log commitments in the order-(2^61-1) subgroup of Z_P*,
// P = 52 * (2^61 - 1) + 1 (a 67-bit prime).
namespace group {

using Element = unsigned __int128;

inline constexpr Element kModulus = static_cast<Element>(52) * kFieldPrime + 1;
inline constexpr Element kGenerator = static_cast<Element>(1) << 52;

inline Element mul(Element a, Element b) {
  // b is processed in 32-bit limbs so every intermediate stays below 2^100.
  Element r = 0;
  for (int shift = 64; shift >= 0; shift -= 32) {
    Element limb = (b >> shift) & 0xFFFFFFFFu;
    r = ((r << 32) + a * limb) % kModulus;
  }
  return r;
}

inline Element pow(Element base, std::uint64_t e) {
  Element r = 1;
  while (e) {
    if (e & 1) r = mul(r, base);
    base = mul(base, base);
    e >>= 1;
  }
  return r;
}

inline std::vector<Element> commit(const std::vector<std::uint64_t>& coeffs) {
  std::vector<Element> out;
  for (auto c : coeffs) out.push_back(pow(kGenerator, c));
  return out;
}

// Checks g^share == prod_k C_k^(x^k).
inline bool verify_share(const std::vector<Element>& commitments, std::uint64_t x, std::uint64_t share) {
  Element rhs = 1;
  std::uint64_t xk = 1;
  for (auto c : commitments) {
    rhs = mul(rhs, pow(c, xk));
    xk = kField.mul(xk, x);
  }
  return pow(kGenerator, share) == rhs;
}

}  // namespace group
}  // namespace coinlab
