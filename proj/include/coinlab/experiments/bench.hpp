#pragma once

#include <cstdint>
#include <vector>

#include "coinlab/experiments/coins.hpp"

namespace coinlab {

struct BenchRow {
  CoinKind kind;
  std::size_t n;
  double bits;
  double baa_bits;
  double messages;
};

struct BenchGrowth {
  CoinKind kind;
  double factor;     // bits(n_large) / bits(n_small)
  double baa_share;  // at n_large; 0 for coins without agreement on weights
};

// Standard per-coin setting used for the bit counters.
inline CoinRunConfig bench_config(CoinKind kind, std::size_t n) {
  CoinRunConfig c;
  c.kind = kind;
  c.n = n;
  c.f = (n - 1) / 3;
  c.adversary = "fifo";
  switch (kind) {
    case CoinKind::approx:
      c.domain = 1000;
      c.epsilon = Rational(1, 20);
      break;
    case CoinKind::reduction:
      c.domain = 2;
      c.delta = Rational(3, 4);
      break;
    case CoinKind::direct:
      c.domain = 8;
      c.delta = Rational(3, 4);
      break;
    case CoinKind::cr93: break;
  }
  return c;
}

inline BenchRow bench_point(CoinKind kind, std::size_t n, std::uint64_t seed, std::uint64_t trials) {
  auto c = bench_config(kind, n);
  double bits = 0, baa = 0, msgs = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    auto run = run_coin(c, derive_seed(seed, t));
    bits += static_cast<double>(run.trace.total_bits());
    baa += static_cast<double>(run.trace.bits_for(Module::baa));
    for (const auto& [fam, cnt] : run.trace.delivered) msgs += static_cast<double>(cnt.messages);
  }
  const double k = static_cast<double>(trials);
  return BenchRow{kind, n, bits / k, baa / k, msgs / k};
}

inline std::vector<BenchGrowth> bench_growth(std::size_t n_small, std::size_t n_large, std::uint64_t seed,
                                             std::uint64_t trials, std::vector<BenchRow>* rows = nullptr) {
  std::vector<BenchGrowth> out;
  for (auto kind : {CoinKind::approx, CoinKind::reduction, CoinKind::direct, CoinKind::cr93}) {
    auto a = bench_point(kind, n_small, seed, trials);
    auto b = bench_point(kind, n_large, seed, trials);
    if (rows) {
      rows->push_back(a);
      rows->push_back(b);
    }
    out.push_back(BenchGrowth{kind, b.bits / a.bits, b.bits > 0 ? b.baa_bits / b.bits : 0});
  }
  return out;
}

}  // namespace coinlab
