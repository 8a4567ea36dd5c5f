#pragma once

#include <boost/math/distributions/chi_squared.hpp>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coinlab/coins/approx.hpp"
#include "coinlab/coins/direct.hpp"
#include "coinlab/sim/adversaries.hpp"
#include "coinlab/sim/simulation.hpp"

namespace coinlab {

enum class CoinKind { approx, reduction, direct, cr93 };

inline const char* coin_name(CoinKind k) {
  switch (k) {
    case CoinKind::approx: return "approx";
    case CoinKind::reduction: return "mc-reduction";
    case CoinKind::direct: return "mc-direct";
    case CoinKind::cr93: return "cr93";
  }
  return "?";
}

inline CoinKind parse_coin(const std::string& s) {
  for (auto k : {CoinKind::approx, CoinKind::reduction, CoinKind::direct, CoinKind::cr93})
    if (s == coin_name(k)) return k;
  throw std::invalid_argument("unknown coin " + s);
}

struct CoinRunConfig {
  CoinKind kind = CoinKind::approx;
  std::size_t n = 4;
  std::size_t f = 1;
  std::uint64_t domain = 8;
  Rational epsilon = Rational(1, 20);
  Rational delta = Rational(2, 3);
  unsigned lambda = 32;
  std::optional<std::size_t> rounds;  // direct coin: override the planned number of rounds
  bool calibrated = true;
  AvssBackend backend = AvssBackend::ideal;
  std::string adversary = "fifo";
  RunOptions options{};
};

struct CoinRun {
  Trace trace;
  std::vector<std::optional<std::uint64_t>> outputs;  // correct processes only; corrupted entries empty
  std::optional<std::uint64_t> first_output;
  std::uint64_t max_distance = 0;
  bool agree = true;
  // Reduction coin only: inner outputs recomputed from the vault secrets and
  // each process's agreed weights.
  std::vector<std::optional<std::uint64_t>> replayed_inner;
  bool replay_matches = true;
  bool disagreement_explained = true;
};

struct CoinPlan {
  ApproxParams approx;
  ReductionParams reduction;
  DirectParams direct;
};

inline CoinPlan plan_coin(const CoinRunConfig& c) {
  CoinPlan plan;
  switch (c.kind) {
    case CoinKind::approx: plan.approx = approx_params(c.domain, c.epsilon, c.f, c.backend); break;
    case CoinKind::reduction: plan.reduction = reduction_params(c.domain, c.delta, c.backend); break;
    case CoinKind::direct:
      plan.direct = direct_params(c.n, c.domain, c.delta, c.lambda, c.calibrated, c.backend);
      if (c.rounds) plan.direct.rounds = *c.rounds;
      break;
    case CoinKind::cr93: break;
  }
  return plan;
}

inline ProcessFactory coin_factory(const SystemConfig& cfg, const CoinRunConfig& c, const CoinPlan& plan) {
  switch (c.kind) {
    case CoinKind::approx:
      return [cfg, p = plan.approx](ProcessId) {
        return std::make_unique<CoinProcess<ApproxCoin>>(std::make_unique<ApproxCoin>(cfg, 0, p));
      };
    case CoinKind::reduction:
      return [cfg, p = plan.reduction](ProcessId) {
        return std::make_unique<CoinProcess<ReductionCoin>>(std::make_unique<ReductionCoin>(cfg, 0, p));
      };
    case CoinKind::direct:
      return [cfg, p = plan.direct](ProcessId) {
        return std::make_unique<CoinProcess<DirectCoin>>(std::make_unique<DirectCoin>(cfg, 0, p));
      };
    case CoinKind::cr93:
      return [cfg](ProcessId) { return std::make_unique<CoinProcess<Cr93Coin>>(std::make_unique<Cr93Coin>(cfg, 0)); };
  }
  throw std::logic_error("coin kind");
}

inline std::uint64_t coin_domain(const CoinRunConfig& c) {
  return c.kind == CoinKind::cr93 ? 2 : c.domain;
}

inline void replay_reduction(Simulation& sim, const SystemConfig& cfg, const ReductionParams& params, CoinRun& run) {
  const std::uint64_t kd = params.factor * params.domain;
  Avss keys(cfg, Tag{0, Module::avss, 0, 0}, params.backend);
  std::vector<std::uint64_t> secrets(cfg.n, 0);
  for (std::uint32_t j = 0; j < cfg.n; ++j)
    secrets[j] = sim.vault().lookup(keys.secret_key(ProcessId{j}, 0, 0)).value_or(0) % kd;
  run.replayed_inner.assign(cfg.n, std::nullopt);
  bool edge = false;
  for (auto p : run.trace.correct()) {
    const ApproxCoin& inner = sim.process_as<CoinProcess<ReductionCoin>>(p).coin().inner();
    if (!inner.weights()) continue;
    auto x = weighted_ring_sum(secrets, *inner.weights(), kd);
    run.replayed_inner[p.value] = x;
    if (inner.output() != x) run.replay_matches = false;
    if (x % params.factor == 0 || x % params.factor == params.factor - 1) edge = true;
  }
  run.disagreement_explained = run.agree || edge;
}

// One full-stack toss; throws NonTermination if the run stalls.
inline CoinRun run_coin(const CoinRunConfig& c, std::uint64_t seed) {
  SystemConfig cfg{c.n, c.f, c.lambda, seed};
  auto plan = plan_coin(c);
  auto adversary = make_adversary(c.adversary);
  Simulation sim(cfg, coin_factory(cfg, c, plan), *adversary, c.options);
  CoinRun run;
  run.trace = sim.run();
  const std::uint64_t domain = coin_domain(c);
  run.outputs.assign(c.n, std::nullopt);
  for (auto p : run.trace.correct())
    if (auto o = run.trace.outputs[p.value]) run.outputs[p.value] = static_cast<std::uint64_t>(*o);
  if (auto first = run.trace.first_finisher()) run.first_output = run.outputs[first->value];
  for (std::size_t a = 0; a < c.n; ++a)
    for (std::size_t b = a + 1; b < c.n; ++b)
      if (run.outputs[a] && run.outputs[b]) {
        run.max_distance = std::max(run.max_distance, ring_distance(domain, *run.outputs[a], *run.outputs[b]));
        if (*run.outputs[a] != *run.outputs[b]) run.agree = false;
      }
  if (c.kind == CoinKind::reduction && c.backend == AvssBackend::ideal) replay_reduction(sim, cfg, plan.reduction, run);
  return run;
}

struct UniformityTest {
  std::vector<std::uint64_t> counts;
  double statistic = 0;
  double p_value = 1;
};

inline UniformityTest chi_square_uniform(const std::vector<std::uint64_t>& values, std::uint64_t domain) {
  UniformityTest t;
  t.counts.assign(domain, 0);
  for (auto v : values) ++t.counts.at(v);
  const double expected = static_cast<double>(values.size()) / static_cast<double>(domain);
  for (auto c : t.counts) t.statistic += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  boost::math::chi_squared dist(static_cast<double>(domain - 1));
  t.p_value = boost::math::cdf(boost::math::complement(dist, t.statistic));
  return t;
}

struct CoinSummary {
  std::uint64_t trials = 0;
  std::uint64_t max_distance = 0;
  std::uint64_t disagreements = 0;
  std::uint64_t unexplained = 0;      // reduction: disagreement without an edge value
  std::uint64_t replay_mismatches = 0;
  std::uint64_t stalls = 0;
  std::vector<std::uint64_t> first_outputs;
  double mean_bits = 0;
  double mean_baa_bits = 0;
};

inline CoinSummary run_coin_trials(const CoinRunConfig& c, std::uint64_t seed, std::uint64_t trials,
                                   const std::vector<std::string>& adversaries = {}) {
  CoinSummary s;
  double bits = 0, baa = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    CoinRunConfig cur = c;
    if (!adversaries.empty()) cur.adversary = adversaries[t % adversaries.size()];
    CoinRun run;
    try {
      run = run_coin(cur, derive_seed(seed, t));
    } catch (const NonTermination&) {
      ++s.stalls;
      continue;
    }
    ++s.trials;
    s.max_distance = std::max(s.max_distance, run.max_distance);
    s.disagreements += !run.agree;
    s.unexplained += !run.disagreement_explained;
    s.replay_mismatches += !run.replay_matches;
    if (run.first_output) s.first_outputs.push_back(*run.first_output);
    bits += static_cast<double>(run.trace.total_bits());
    baa += static_cast<double>(run.trace.bits_for(Module::baa));
  }
  if (s.trials) {
    s.mean_bits = bits / static_cast<double>(s.trials);
    s.mean_baa_bits = baa / static_cast<double>(s.trials);
  }
  return s;
}

}  // namespace coinlab
