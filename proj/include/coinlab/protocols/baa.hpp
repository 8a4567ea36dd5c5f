#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "coinlab/core/bytes.hpp"
#include "coinlab/core/ids.hpp"
#include "coinlab/math/dyadic.hpp"
#include "coinlab/protocols/brb.hpp"
#include "coinlab/sim/process.hpp"

namespace coinlab {

// Smallest r with 2^-r <= eps_bar.
inline std::size_t baa_rounds_for(double eps_bar) {
  if (!(eps_bar > 0) || eps_bar > 1) throw std::invalid_argument("eps_bar must be in (0, 1]");
  std::size_t r = 0;
  while (std::ldexp(1.0, -static_cast<int>(r)) > eps_bar) ++r;
  return r;
}

// n parallel approximate agreements on [0,1] bundled in one vector. Each
// round: reliably broadcast the vector, broadcast a witness naming the first
// n-f vectors delivered, wait for n-f witnesses whose vectors are all
// delivered, then take the trimmed midpoint per coordinate over the union of
// the cited vectors.
class Baa {
 public:
  using DoneFn = std::function<void(Context&, const WeightVector&)>;

  Baa(const SystemConfig& cfg, Tag base, std::size_t rounds)
      : n_(cfg.n), f_(cfg.f), rounds_(rounds), brb_(cfg, base), vectors_(rounds), witnesses_(rounds),
        arrival_(rounds), witness_sent_(rounds, false) {
    if (rounds > Dyadic::kMaxExponent - 1) throw std::invalid_argument("too many BAA rounds");
    brb_.on_deliver = [this](Context& ctx, ProcessId leader, std::uint32_t slot, const Bytes& m) {
      on_deliver(ctx, leader, slot, m);
    };
  }

  DoneFn on_done;

  std::size_t rounds() const { return rounds_; }

  void start(Context& ctx, WeightVector inputs) {
    if (inputs.size() != n_) throw std::invalid_argument("BAA input length must be n");
    if (started_) return;
    started_ = true;
    history_.push_back(inputs);
    if (rounds_ == 0) {
      finish(ctx);
      return;
    }
    broadcast_vector(ctx, 0, inputs);
    advance(ctx);
  }

  bool handle(Context& ctx, const Envelope& env) { return brb_.handle(ctx, env); }

  bool done() const { return done_; }
  const WeightVector& output() const { return history_.back(); }
  // history()[t] is this process's vector after t rounds.
  const std::vector<WeightVector>& history() const { return history_; }

  static Bytes encode(const WeightVector& v) {
    Writer w;
    for (const auto& d : v) w.u8(static_cast<std::uint8_t>(d.exponent())).u64(d.numerator());
    return w.take();
  }

  static std::optional<WeightVector> decode(const Bytes& m, std::size_t n) {
    try {
      Reader r(m);
      WeightVector v;
      for (std::size_t i = 0; i < n; ++i) {
        unsigned e = r.u8();
        std::uint64_t num = r.u64();
        v.push_back(Dyadic::make(num, e));
      }
      r.expect_done();
      return v;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

 private:
  void broadcast_vector(Context& ctx, std::size_t round, const WeightVector& v) {
    brb_.broadcast(ctx, static_cast<std::uint32_t>(2 * round), encode(v));
  }

  void on_deliver(Context& ctx, ProcessId leader, std::uint32_t slot, const Bytes& m) {
    std::size_t round = slot / 2;
    if (round >= rounds_) return;
    if (slot % 2 == 0) {
      auto v = decode(m, n_);
      if (!v) return;
      vectors_[round][leader] = std::move(*v);
      arrival_[round].push_back(leader);
    } else {
      try {
        Reader r(m);
        ProcessSet s(r.u64());
        r.expect_done();
        if (s.size() < n_ - f_ || !s.subset_of(ProcessSet::all(n_))) return;
        witnesses_[round][leader] = s;
      } catch (const MalformedMessage&) {
        return;
      }
    }
    advance(ctx);
  }

  void advance(Context& ctx) {
    while (!done_ && round_ < rounds_) {
      const std::size_t r = round_;
      auto& got = vectors_[r];
      if (!witness_sent_[r] && got.size() >= n_ - f_) {
        witness_sent_[r] = true;
        ProcessSet first;
        for (std::size_t i = 0; i < n_ - f_; ++i) first.insert(arrival_[r][i]);
        Writer w;
        w.u64(first.bits());
        brb_.broadcast(ctx, static_cast<std::uint32_t>(2 * r + 1), w.take());
      }
      ProcessSet cited;
      std::size_t satisfied = 0;
      for (const auto& [j, s] : witnesses_[r]) {
        bool ok = true;
        for (auto l : s.members())
          if (!got.count(l)) {
            ok = false;
            break;
          }
        if (!ok) continue;
        cited |= s;
        if (++satisfied == n_ - f_) break;
      }
      if (!witness_sent_[r] || satisfied < n_ - f_) return;

      WeightVector next(n_);
      std::vector<Dyadic> column;
      for (std::size_t c = 0; c < n_; ++c) {
        column.clear();
        for (auto l : cited.members()) column.push_back(got[l][c]);
        next[c] = trim_midpoint(column, f_);
      }
      history_.push_back(next);
      ++round_;
      if (round_ < rounds_) {
        broadcast_vector(ctx, round_, next);
      } else {
        finish(ctx);
      }
    }
  }

  void finish(Context& ctx) {
    if (done_) return;
    done_ = true;
    if (on_done) on_done(ctx, history_.back());
  }

  std::size_t n_, f_, rounds_;
  Brb brb_;
  std::vector<std::map<ProcessId, WeightVector>> vectors_;
  std::vector<std::map<ProcessId, ProcessSet>> witnesses_;
  std::vector<std::vector<ProcessId>> arrival_;
  std::vector<bool> witness_sent_;
  std::vector<WeightVector> history_;
  std::size_t round_ = 0;
  bool started_ = false;
  bool done_ = false;
};

}  // namespace coinlab
