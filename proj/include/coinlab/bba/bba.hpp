#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "coinlab/coins/approx.hpp"
#include "coinlab/core/bytes.hpp"
#include "coinlab/core/ids.hpp"
#include "coinlab/protocols/brb.hpp"
#include "coinlab/sim/process.hpp"

namespace coinlab {

enum class CoinMode {
  real,    // Monte Carlo coin from the approximate coin, one toss per round
  shared,  // hash of (seed, round): a perfect coin with no messages
  local,   // private coin flip per process
};

struct BbaOptions {
  CoinMode coin = CoinMode::real;
  Rational delta = Rational(3, 4);
  // Rounds (1-based, inclusive) in which the coin seen by this process is
  // flipped with probability 1/2, to force coin disagreement.
  std::uint32_t inject_until = 0;
  AvssBackend backend = AvssBackend::ideal;
};

// Binary agreement: BV-broadcast, one AUX wave, then a decision wave sent by
// reliable broadcast. A decision-wave value counts only when justified by the
// local bin_values. With n-f counted: 2f+1 equal values decide, f+1 set the
// estimate, otherwise the round's coin does.
class BbaProcess : public Process {
 public:
  static constexpr std::uint8_t kBval = 0, kAux = 1, kDec = 2;
  static constexpr std::uint8_t kBottom = 2;

  BbaProcess(const SystemConfig& cfg, int input, BbaOptions opts)
      : cfg_(cfg), est_(input & 1), opts_(opts), dec_(cfg, Tag{0, Module::bba, kDec, 0}) {
    dec_.on_deliver = [this](Context& ctx, ProcessId leader, std::uint32_t slot, const Bytes& m) {
      if (m.size() != 1 || m[0] > kBottom) return;
      round(slot).decs[leader] = m[0];
      progress(ctx);
    };
  }

  void start(Context& ctx) override {
    round_ = 1;
    send_bval(ctx, 1, est_);
    progress(ctx);
  }

  void receive(Context& ctx, const Envelope& env) override {
    const Tag& t = env.tag;
    if (t.module != Module::bba) {
      auto it = coins_.find(t.session);
      if (it == coins_.end()) {
        // Coin traffic for a round we have not reached: buffer it.
        early_[t.session].push_back(env);
        return;
      }
      it->second->handle(ctx, env);
      return;
    }
    if (t.lane == kDec) {
      dec_.handle(ctx, env);
      return;
    }
    if (env.payload.size() != 1 || env.payload[0] > 1) return;
    const int b = env.payload[0];
    auto& rs = round(t.session);
    if (t.lane == kBval) {
      if (rs.bval_from[b].contains(env.src)) return;
      rs.bval_from[b].insert(env.src);
    } else if (t.lane == kAux) {
      if (rs.aux.count(env.src)) return;
      rs.aux[env.src] = b;
    }
    progress(ctx);
  }

  std::optional<int> decision() const { return decision_; }
  std::uint32_t decided_round() const { return decided_round_; }
  std::uint32_t current_round() const { return round_; }
  const std::map<std::uint32_t, int>& coin_values() const { return coin_seen_; }

 private:
  struct RoundState {
    ProcessSet bval_from[2];
    bool sent_bval[2] = {false, false};
    bool bin[2] = {false, false};
    bool sent_aux = false;
    std::map<ProcessId, int> aux;
    bool sent_dec = false;
    std::map<ProcessId, std::uint8_t> decs;
    bool finished = false;
  };

  RoundState& round(std::uint32_t r) { return rounds_[r]; }

  Tag tag(std::uint8_t lane, std::uint32_t r) const { return Tag{r, Module::bba, lane, 0}; }

  void send_bval(Context& ctx, std::uint32_t r, int b) {
    auto& rs = round(r);
    if (rs.sent_bval[b]) return;
    rs.sent_bval[b] = true;
    ctx.send_all(tag(kBval, r), Bytes{static_cast<std::uint8_t>(b)});
  }

  void start_coin(Context& ctx, std::uint32_t r) {
    if (coins_.count(r) || opts_.coin != CoinMode::real) return;
    auto coin = std::make_unique<ReductionCoin>(cfg_, r, reduction_params(2, opts_.delta, opts_.backend));
    coin->on_output = [this, r](Context& c, std::uint64_t v) { on_coin(c, r, static_cast<int>(v & 1)); };
    auto* raw = coin.get();
    coins_[r] = std::move(coin);
    raw->toss(ctx);
    auto buffered = std::move(early_[r]);
    early_.erase(r);
    for (const auto& env : buffered) raw->handle(ctx, env);
  }

  void on_coin(Context& ctx, std::uint32_t r, int v) {
    on_coin_value(ctx, r, v);
    progress(ctx);
  }

  std::optional<int> coin_for(Context& ctx, std::uint32_t r) {
    if (opts_.coin == CoinMode::real) {
      auto it = coin_seen_.find(r);
      if (it == coin_seen_.end()) return std::nullopt;
      return it->second;
    }
    if (!coin_seen_.count(r)) {
      int v;
      if (opts_.coin == CoinMode::shared)
        v = static_cast<int>(derive_seed(cfg_.master_seed, 0xC014, r) & 1);
      else
        v = static_cast<int>(ctx.rng(Tag{r, Module::bba, 6, 0}).below(2));
      on_coin_value(ctx, r, v);
    }
    return coin_seen_[r];
  }

  void on_coin_value(Context& ctx, std::uint32_t r, int v) {
    if (r <= opts_.inject_until && ctx.rng(Tag{r, Module::bba, 7, 0}).below(2) == 1) v ^= 1;
    coin_seen_[r] = v;
  }

  bool justified(const RoundState& rs, std::uint8_t x) const {
    if (x == kBottom) return rs.bin[0] && rs.bin[1];
    return rs.bin[x];
  }

  void progress(Context& ctx) {
    // Loop because finishing a round may immediately enable the next one.
    while (true) {
      const std::uint32_t r = round_;
      auto& rs = round(r);
      for (int b = 0; b < 2; ++b) {
        if (rs.bval_from[b].size() >= cfg_.f + 1) send_bval(ctx, r, b);
        if (rs.bval_from[b].size() >= 2 * cfg_.f + 1 && !rs.bin[b]) {
          rs.bin[b] = true;
          if (!rs.sent_aux) {
            rs.sent_aux = true;
            ctx.send_all(tag(kAux, r), Bytes{static_cast<std::uint8_t>(b)});
          }
        }
      }
      if (!rs.sent_dec) {
        std::size_t count = 0;
        bool seen[2] = {false, false};
        for (const auto& [j, b] : rs.aux) {
          if (!rs.bin[b]) continue;
          ++count;
          seen[b] = true;
        }
        if (count < cfg_.n - cfg_.f) return;
        rs.sent_dec = true;
        std::uint8_t x = seen[0] && seen[1] ? kBottom : (seen[1] ? 1 : 0);
        dec_.broadcast(ctx, r, Bytes{x});
        start_coin(ctx, r);
      }
      std::size_t count = 0, votes[3] = {0, 0, 0};
      for (const auto& [j, x] : rs.decs) {
        if (!justified(rs, x)) continue;
        ++votes[x];
        if (++count == cfg_.n - cfg_.f) break;
      }
      if (count < cfg_.n - cfg_.f) return;
      int next;
      if (votes[0] >= 2 * cfg_.f + 1 || votes[1] >= 2 * cfg_.f + 1) {
        next = votes[1] >= 2 * cfg_.f + 1 ? 1 : 0;
        if (!decision_) {
          decision_ = next;
          decided_round_ = r;
          ctx.output(next);
        }
      } else if (votes[0] >= cfg_.f + 1 || votes[1] >= cfg_.f + 1) {
        next = votes[1] > votes[0] ? 1 : 0;
      } else {
        auto c = coin_for(ctx, r);
        if (!c) return;
        next = *c;
      }
      rs.finished = true;
      est_ = next;
      round_ = r + 1;
      send_bval(ctx, round_, est_);
    }
  }

  SystemConfig cfg_;
  int est_;
  BbaOptions opts_;
  Brb dec_;
  std::uint32_t round_ = 0;
  std::map<std::uint32_t, RoundState> rounds_;
  std::map<std::uint32_t, std::unique_ptr<ReductionCoin>> coins_;
  std::map<std::uint32_t, std::vector<Envelope>> early_;
  std::map<std::uint32_t, int> coin_seen_;
  std::optional<int> decision_;
  std::uint32_t decided_round_ = 0;
};

}  // namespace coinlab
