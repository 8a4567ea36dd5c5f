#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "coinlab/coins/coin.hpp"
#include "coinlab/coins/formulas.hpp"
#include "coinlab/math/dyadic.hpp"
#include "coinlab/protocols/baa.hpp"
#include "coinlab/protocols/gather.hpp"
#include "coinlab/protocols/rsd.hpp"

namespace coinlab {

struct DirectParams {
  std::uint64_t domain = 2;
  unsigned lambda = 32;
  std::size_t rounds = 6;
  bool calibrated = false;
  Rational v = Rational(0);
  AvssBackend backend = AvssBackend::ideal;
};

// Picks rounds and calibration from the target failure probability Q.
inline DirectParams direct_params(std::size_t n, std::uint64_t domain, const Rational& delta, unsigned lambda,
                                  bool want_calibration, AvssBackend backend = AvssBackend::ideal) {
  if (delta <= 0 || delta >= 1) throw std::invalid_argument("delta must be in (0, 1)");
  BigFloat q = BigFloat(boost::multiprecision::numerator(Rational(1) - delta).str()) /
               BigFloat(boost::multiprecision::denominator(Rational(1) - delta).str());
  auto plan = rounds_for(want_calibration ? CalibrationMode::calibrated : CalibrationMode::uncalibrated, n, q);
  DirectParams p;
  p.domain = domain;
  p.lambda = lambda;
  p.rounds = plan.rounds;
  p.backend = backend;
  p.calibrated = plan.mode == CalibrationMode::calibrated;
  if (p.calibrated) p.v = dyadic_round(compute_v(n, q));
  return p;
}

// Index of the largest calibrated ticket among positive weights; ties go to
// the lowest id.
inline std::optional<std::size_t> pick_winner(const WeightVector& w, const std::vector<std::uint64_t>& tickets,
                                              const DirectParams& p) {
  const Rational eps = Rational(1, BigInt(1) << p.rounds);
  std::optional<std::size_t> best;
  Rational best_score(-1);
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j].is_zero()) continue;
    Rational weight = p.calibrated ? calibrate(w[j].to_rational(), eps, p.v) : w[j].to_rational();
    Rational score = weight * Rational(BigInt(tickets[j]));
    if (score > best_score) {
      best_score = score;
      best = j;
    }
  }
  return best;
}

// Direct Monte Carlo coin: tickets and values from two secret draws, gather
// over assigned processes, approximate agreement on the indicator vector,
// then the value of the largest calibrated ticket wins.
class DirectCoin : public CoinInstance {
 public:
  DirectCoin(const SystemConfig& cfg, std::uint32_t session, DirectParams params)
      : n_(cfg.n), params_(params),
        tickets_(cfg, Tag{session, Module::rsd_tickets, 0, 0}, std::uint64_t{1} << params.lambda, params.backend),
        values_(cfg, Tag{session, Module::rsd, 0, 0}, params.domain, params.backend),
        gather_(cfg, Tag{session, Module::gather, 0, 0},
                [this](ProcessId j) { return tickets_.assigned(j) && values_.assigned(j); }),
        baa_(cfg, Tag{session, Module::baa, 0, 0}, params.rounds),
        session_(session) {
    if (cfg.f == 0) throw std::invalid_argument("coin protocols need f >= 1");
    if (params.calibrated && params.rounds < 4) throw std::invalid_argument("calibration needs eps <= 1/16");
    tickets_.on_value_assigned = [this](Context& ctx, ProcessId) { gather_.accept_changed(ctx); };
    values_.on_value_assigned = [this](Context& ctx, ProcessId) { gather_.accept_changed(ctx); };
    gather_.on_output = [this](Context& ctx, ProcessSet s) {
      WeightVector w(n_);
      for (auto j : s.members()) w[j.value] = Dyadic::one();
      baa_.start(ctx, w);
    };
    baa_.on_done = [this](Context& ctx, const WeightVector& w) { on_weights(ctx, w); };
  }

  std::uint64_t domain() const override { return params_.domain; }
  const DirectParams& params() const { return params_; }

  void toss(Context& ctx) override {
    tickets_.start(ctx);
    values_.start(ctx);
    gather_.start(ctx);
  }

  bool handle(Context& ctx, const Envelope& env) override {
    return tickets_.handle(ctx, env) || values_.handle(ctx, env) || gather_.handle(ctx, env) ||
           baa_.handle(ctx, env);
  }

  const std::optional<WeightVector>& weights() const { return weights_; }
  const std::map<ProcessId, std::uint64_t>& ticket_values() const { return ticket_values_; }
  const std::map<ProcessId, std::uint64_t>& coin_values() const { return coin_values_; }
  std::optional<std::size_t> winner() const { return winner_; }
  const Rsd& tickets() const { return tickets_; }
  const Rsd& values() const { return values_; }
  const Gather& gather() const { return gather_; }
  const Baa& baa() const { return baa_; }

 private:
  void on_weights(Context& ctx, const WeightVector& w) {
    weights_ = w;
    ctx.mark("baa_done", static_cast<std::int64_t>(session_));
    ctx.mark("enable", static_cast<std::int64_t>(session_));
    tickets_.enable(ctx);
    values_.enable(ctx);
    ProcessSet candidates;
    for (std::uint32_t j = 0; j < n_; ++j)
      if (!w[j].is_zero()) candidates.insert(ProcessId{j});
    tickets_.retrieve_values(ctx, candidates, [this](Context& c, const std::map<ProcessId, std::uint64_t>& m) {
      ticket_values_ = m;
      have_tickets_ = true;
      try_finish(c);
    });
    values_.retrieve_values(ctx, candidates, [this](Context& c, const std::map<ProcessId, std::uint64_t>& m) {
      coin_values_ = m;
      have_values_ = true;
      try_finish(c);
    });
  }

  void try_finish(Context& ctx) {
    if (!have_tickets_ || !have_values_ || output_) return;
    std::vector<std::uint64_t> t(n_, 0);
    for (const auto& [j, v] : ticket_values_) t[j.value] = v;
    winner_ = pick_winner(*weights_, t, params_);
    if (!winner_) throw std::logic_error("no candidate with positive weight");
    emit(ctx, coin_values_.at(ProcessId{static_cast<std::uint32_t>(*winner_)}));
  }

  std::size_t n_;
  DirectParams params_;
  Rsd tickets_;
  Rsd values_;
  Gather gather_;
  Baa baa_;
  std::uint32_t session_;
  std::optional<WeightVector> weights_;
  std::map<ProcessId, std::uint64_t> ticket_values_, coin_values_;
  bool have_tickets_ = false, have_values_ = false;
  std::optional<std::size_t> winner_;
};

// Canetti-Rabin style coin: one secret draw over ceil(0.87 n), gather over
// assigned processes, output 0 iff some gathered value is 0.
class Cr93Coin : public CoinInstance {
 public:
  static std::uint64_t domain_for(std::size_t n) { return (87 * n + 99) / 100; }

  Cr93Coin(const SystemConfig& cfg, std::uint32_t session, AvssBackend backend = AvssBackend::ideal)
      : values_(cfg, Tag{session, Module::rsd, 0, 0}, std::max<std::uint64_t>(2, domain_for(cfg.n)), backend),
        gather_(cfg, Tag{session, Module::gather, 0, 0}, [this](ProcessId j) { return values_.assigned(j); }) {
    if (cfg.f == 0) throw std::invalid_argument("coin protocols need f >= 1");
    values_.on_value_assigned = [this](Context& ctx, ProcessId) { gather_.accept_changed(ctx); };
    gather_.on_output = [this](Context& ctx, ProcessSet s) {
      ctx.mark("enable", 0);
      values_.enable(ctx);
      values_.retrieve_values(ctx, s, [this](Context& c, const std::map<ProcessId, std::uint64_t>& m) {
        bool zero = false;
        for (const auto& [j, v] : m) zero = zero || v == 0;
        emit(c, zero ? 0 : 1);
      });
    };
  }

  std::uint64_t domain() const override { return 2; }
  void toss(Context& ctx) override {
    values_.start(ctx);
    gather_.start(ctx);
  }
  bool handle(Context& ctx, const Envelope& env) override {
    return values_.handle(ctx, env) || gather_.handle(ctx, env);
  }
  const Gather& gather() const { return gather_; }
  const Rsd& values() const { return values_; }

 private:
  Rsd values_;
  Gather gather_;
};

}  // namespace coinlab
