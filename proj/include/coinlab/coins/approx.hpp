#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "coinlab/coins/coin.hpp"
#include "coinlab/coins/formulas.hpp"
#include "coinlab/core/ids.hpp"
#include "coinlab/math/dyadic.hpp"
#include "coinlab/protocols/avss.hpp"
#include "coinlab/protocols/baa.hpp"
#include "coinlab/protocols/gather.hpp"

namespace coinlab {

struct ApproxParams {
  std::uint64_t domain = 2;
  Rational epsilon = Rational(1);
  std::size_t rounds = 0;
  AvssBackend backend = AvssBackend::ideal;
};

inline ApproxParams approx_params(std::uint64_t domain, const Rational& epsilon, std::size_t f,
                                  AvssBackend backend = AvssBackend::ideal) {
  if (domain < 2) throw std::invalid_argument("domain must be at least 2");
  if (domain >= kFieldPrime) throw std::invalid_argument("domain must fit the secret field");
  return ApproxParams{domain, epsilon, approx_rounds(epsilon, f), backend};
}

// ceil(sum_j x_j * w_j) mod D, exact.
inline std::uint64_t weighted_ring_sum(const std::vector<std::uint64_t>& xs, const WeightVector& w,
                                       std::uint64_t domain) {
  unsigned e = 0;
  for (const auto& d : w) e = std::max(e, d.exponent());
  BigInt total = 0;
  for (std::size_t j = 0; j < xs.size(); ++j)
    total += BigInt(xs[j]) * BigInt(w[j].numerator()) * (BigInt(1) << (e - w[j].exponent()));
  BigInt scale = BigInt(1) << e;
  BigInt ceil = (total + scale - 1) / scale;
  return static_cast<std::uint64_t>(ceil % domain);
}

// Approximate common coin: share a random x, gather completed sharings,
// agree approximately on the indicator vector, then open and combine.
class ApproxCoin : public CoinInstance {
 public:
  ApproxCoin(const SystemConfig& cfg, std::uint32_t session, ApproxParams params)
      : n_(cfg.n), params_(params),
        avss_(cfg, Tag{session, Module::avss, 0, 0}, params.backend),
        gather_(cfg, Tag{session, Module::gather, 0, 0}, [this](ProcessId j) { return completed_.contains(j); }),
        baa_(cfg, Tag{session, Module::baa, 0, 0}, params.rounds),
        session_(session) {
    if (cfg.f == 0) throw std::invalid_argument("coin protocols need f >= 1");
    avss_.on_complete = [this](Context& ctx, ProcessId dealer, std::uint32_t) {
      completed_.insert(dealer);
      gather_.accept_changed(ctx);
    };
    avss_.on_retrieved = [this](Context& ctx, ProcessId dealer, std::uint32_t, std::uint32_t, std::uint64_t v) {
      opened_[dealer] = v % params_.domain;
      try_finish(ctx);
    };
    gather_.on_output = [this](Context& ctx, ProcessSet s) {
      WeightVector w(n_);
      for (auto j : s.members()) w[j.value] = Dyadic::one();
      baa_.start(ctx, w);
    };
    baa_.on_done = [this](Context& ctx, const WeightVector& w) { on_weights(ctx, w); };
  }

  std::uint64_t domain() const override { return params_.domain; }
  const ApproxParams& params() const { return params_; }

  void toss(Context& ctx) override {
    secret_ = ctx.rng(Tag{session_, Module::coin, 0, 0}).below(params_.domain);
    avss_.share(ctx, 0, {*secret_});
    gather_.start(ctx);
  }

  bool handle(Context& ctx, const Envelope& env) override {
    return avss_.handle(ctx, env) || gather_.handle(ctx, env) || baa_.handle(ctx, env);
  }

  std::optional<std::uint64_t> secret() const { return secret_; }
  const std::optional<WeightVector>& weights() const { return weights_; }
  const std::map<ProcessId, std::uint64_t>& opened() const { return opened_; }
  const Gather& gather() const { return gather_; }
  const Baa& baa() const { return baa_; }

 private:
  void on_weights(Context& ctx, const WeightVector& w) {
    weights_ = w;
    ctx.mark("baa_done", static_cast<std::int64_t>(session_));
    ctx.mark("enable", static_cast<std::int64_t>(session_));
    avss_.enable_all(ctx);
    for (std::uint32_t j = 0; j < n_; ++j)
      if (!w[j].is_zero()) avss_.retrieve(ctx, ProcessId{j}, 0, 0);
    try_finish(ctx);
  }

  void try_finish(Context& ctx) {
    if (!weights_ || output_) return;
    std::vector<std::uint64_t> xs(n_, 0);
    for (std::uint32_t j = 0; j < n_; ++j) {
      if ((*weights_)[j].is_zero()) continue;
      auto it = opened_.find(ProcessId{j});
      if (it == opened_.end()) return;
      xs[j] = it->second;
    }
    emit(ctx, weighted_ring_sum(xs, *weights_, params_.domain));
  }

  std::size_t n_;
  ApproxParams params_;
  Avss avss_;
  ProcessSet completed_;
  Gather gather_;
  Baa baa_;
  std::uint32_t session_;
  std::optional<std::uint64_t> secret_;
  std::optional<WeightVector> weights_;
  std::map<ProcessId, std::uint64_t> opened_;
};

struct ReductionParams {
  std::uint64_t domain = 2;
  Rational delta = Rational(2, 3);
  std::uint64_t factor = 6;
  AvssBackend backend = AvssBackend::ideal;

  ApproxParams inner(std::size_t f) const {
    std::uint64_t kd = factor * domain;
    return approx_params(kd, Rational(1, static_cast<long long>(kd)), f, backend);
  }
};

inline ReductionParams reduction_params(std::uint64_t domain, const Rational& delta,
                                        AvssBackend backend = AvssBackend::ideal) {
  return ReductionParams{domain, delta, reduction_factor(delta), backend};
}

// Monte Carlo coin from the approximate coin: toss over kD with precision
// 1/(kD) and divide by k.
class ReductionCoin : public CoinInstance {
 public:
  ReductionCoin(const SystemConfig& cfg, std::uint32_t session, ReductionParams params)
      : params_(params), inner_(cfg, session, params.inner(cfg.f)) {
    inner_.on_output = [this](Context& ctx, std::uint64_t x) { emit(ctx, x / params_.factor); };
  }

  std::uint64_t domain() const override { return params_.domain; }
  const ReductionParams& params() const { return params_; }
  void toss(Context& ctx) override { inner_.toss(ctx); }
  bool handle(Context& ctx, const Envelope& env) override { return inner_.handle(ctx, env); }
  const ApproxCoin& inner() const { return inner_; }

 private:
  ReductionParams params_;
  ApproxCoin inner_;
};

}  // namespace coinlab
