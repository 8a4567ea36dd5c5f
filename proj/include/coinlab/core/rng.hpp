#pragma once

#include <cstdint>
#include <random>

#include "coinlab/core/bytes.hpp"
#include "coinlab/core/digest.hpp"
#include "coinlab/core/ids.hpp"

namespace coinlab {

// mt19937_64 with bounded draws done by rejection so results do not depend on
// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, bound); bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    if ((bound & (bound - 1)) == 0) return engine_() & (bound - 1);
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  Writer w;
  w.u64(master).u64(a).u64(b).u64(c);
  auto h = sha256(w.take());
  std::uint64_t s = 0;
  for (int i = 0; i < 8; ++i) s |= static_cast<std::uint64_t>(h[i]) << (8 * i);
  return s;
}

inline Rng process_rng(std::uint64_t master, ProcessId p, const Tag& t, std::uint64_t persona = 0) {
  Writer w;
  w.u64(master).u32(p.value).u32(t.session).u8(static_cast<std::uint8_t>(t.module)).u8(t.lane).u32(t.instance).u64(persona);
  auto h = sha256(w.take());
  std::uint64_t s = 0;
  for (int i = 0; i < 8; ++i) s |= static_cast<std::uint64_t>(h[i]) << (8 * i);
  return Rng(s);
}

}  // namespace coinlab
