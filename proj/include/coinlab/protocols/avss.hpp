#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "coinlab/core/bytes.hpp"
#include "coinlab/core/ids.hpp"
#include "coinlab/math/field.hpp"
#include "coinlab/protocols/brb.hpp"
#include "coinlab/sim/process.hpp"

namespace coinlab {

enum class AvssBackend { ideal, shamir };

inline const char* backend_name(AvssBackend b) { return b == AvssBackend::ideal ? "ideal" : "shamir"; }

// Verifiable secret sharing. One sharing run, keyed by (dealer, slot), may
// carry a batch of secrets; completion is joint, retrieval is per secret.
//
// ideal:  secrets go to the simulator vault, a token is broadcast, and the
//         vault answers retrieval once f+1 processes have enabled.
// shamir: degree-f polynomials with discrete-log commitments on the
//         coefficients, broadcast reliably; shares are acked, completion is
//         voted with 2f+1 acks / f+1 amplification / 2f+1 completes, and
//         retrieval interpolates from f+1 verified shares.
class Avss {
 public:
  using CompleteFn = std::function<void(Context&, ProcessId dealer, std::uint32_t slot)>;
  using RetrievedFn =
      std::function<void(Context&, ProcessId dealer, std::uint32_t slot, std::uint32_t index, std::uint64_t)>;

  static constexpr std::uint8_t kBrbLane = 0, kShareLane = 1, kAckLane = 2, kCompleteLane = 3, kRevealLane = 4;
  static constexpr std::uint32_t kMaxBatch = 64;

  Avss(const SystemConfig& cfg, Tag base, AvssBackend backend)
      : n_(cfg.n), f_(cfg.f), base_(base), backend_(backend), brb_(cfg, base.with_lane(kBrbLane)) {
    brb_.on_deliver = [this](Context& ctx, ProcessId dealer, std::uint32_t slot, const Bytes& m) {
      on_broadcast(ctx, dealer, slot, m);
    };
  }

  CompleteFn on_complete;
  RetrievedFn on_retrieved;

  AvssBackend backend() const { return backend_; }

  // Vault key of one secret of one sharing run.
  Tag secret_key(ProcessId dealer, std::uint32_t slot, std::uint32_t index) const {
    return Tag{base_.session, base_.module, 0, (slot << 12) | (dealer.value << 6) | index};
  }

  void share(Context& ctx, std::uint32_t slot, const std::vector<std::uint64_t>& secrets) {
    if (secrets.empty() || secrets.size() > kMaxBatch) throw std::invalid_argument("bad batch size");
    auto& inst = instance(ctx.self(), slot);
    if (inst.dealt) throw std::logic_error("double share on one instance");
    inst.dealt = true;
    const auto width = static_cast<std::uint32_t>(secrets.size());
    if (backend_ == AvssBackend::ideal) {
      for (std::uint32_t t = 0; t < width; ++t) ctx.vault_deposit(secret_key(ctx.self(), slot, t), secrets[t]);
      Writer w;
      w.u32(width);
      brb_.broadcast(ctx, slot, w.take());
      return;
    }
    Rng& rng = ctx.rng(base_.with_lane(kShareLane).with_instance(Brb::instance_of(ctx.self(), slot)));
    std::vector<std::vector<std::uint64_t>> polys;
    Writer cw;
    cw.u32(width).u32(static_cast<std::uint32_t>(f_ + 1));
    for (auto s : secrets) {
      std::vector<std::uint64_t> coeffs{s % kFieldPrime};
      for (std::size_t k = 0; k < f_; ++k) coeffs.push_back(rng.below(kFieldPrime));
      for (auto c : group::commit(coeffs)) cw.u64(static_cast<std::uint64_t>(c)).u64(static_cast<std::uint64_t>(c >> 64));
      polys.push_back(std::move(coeffs));
    }
    brb_.broadcast(ctx, slot, cw.take());
    for (std::uint32_t j = 0; j < n_; ++j) {
      Writer sw;
      for (const auto& poly : polys) sw.u64(eval_poly(poly, j + 1, kField));
      ctx.send(ProcessId{j}, lane_tag(kShareLane, ctx.self(), slot), sw.take());
    }
  }

  void enable(Context& ctx, ProcessId dealer, std::uint32_t slot) {
    auto& inst = instance(dealer, slot);
    inst.enabled = true;
    maybe_reveal(ctx, dealer, slot, inst);
  }

  // Enables every run, including ones that complete later.
  void enable_all(Context& ctx) {
    if (enable_all_) return;
    enable_all_ = true;
    for (auto& [key, inst] : instances_) maybe_reveal(ctx, ProcessId{key % 64}, key / 64, inst);
  }

  void retrieve(Context& ctx, ProcessId dealer, std::uint32_t slot, std::uint32_t index) {
    auto& inst = instance(dealer, slot);
    if (inst.results.count(index)) {
      if (on_retrieved) on_retrieved(ctx, dealer, slot, index, inst.results[index]);
      return;
    }
    inst.wanted.insert(index);
    try_retrieve(ctx, dealer, slot, inst);
  }

  bool complete(ProcessId dealer, std::uint32_t slot) const {
    auto it = instances_.find(Brb::instance_of(dealer, slot));
    return it != instances_.end() && it->second.complete;
  }

  std::optional<std::uint64_t> result(ProcessId dealer, std::uint32_t slot, std::uint32_t index) const {
    auto it = instances_.find(Brb::instance_of(dealer, slot));
    if (it == instances_.end()) return std::nullopt;
    auto r = it->second.results.find(index);
    if (r == it->second.results.end()) return std::nullopt;
    return r->second;
  }

  bool enabled(ProcessId dealer, std::uint32_t slot) const {
    auto it = instances_.find(Brb::instance_of(dealer, slot));
    return enable_all_ || (it != instances_.end() && it->second.enabled);
  }

  bool handle(Context& ctx, const Envelope& env) {
    if (env.tag.session != base_.session || env.tag.module != base_.module) return false;
    if (brb_.handle(ctx, env)) return true;
    if (env.tag.lane < kShareLane || env.tag.lane > kRevealLane) return false;
    const ProcessId dealer{env.tag.instance % 64};
    const std::uint32_t slot = env.tag.instance / 64;
    if (dealer.value >= n_) return true;
    auto& inst = instance(dealer, slot);
    try {
      Reader r(env.payload);
      switch (env.tag.lane) {
        case kShareLane: {
          if (backend_ != AvssBackend::shamir || env.src != dealer || inst.raw_shares) break;
          std::vector<std::uint64_t> shares;
          while (!r.done()) shares.push_back(r.u64());
          inst.raw_shares = std::move(shares);
          check_shares(ctx, dealer, slot, inst);
          break;
        }
        case kAckLane:
          r.expect_done();
          inst.acks.insert(env.src);
          maybe_vote(ctx, dealer, slot, inst);
          break;
        case kCompleteLane:
          r.expect_done();
          inst.completes.insert(env.src);
          maybe_vote(ctx, dealer, slot, inst);
          break;
        case kRevealLane: {
          if (inst.revealers.contains(env.src)) break;
          inst.revealers.insert(env.src);
          std::vector<std::uint64_t> shares;
          while (!r.done()) shares.push_back(r.u64());
          inst.raw_reveals[env.src] = std::move(shares);
          verify_reveals(inst);
          try_retrieve(ctx, dealer, slot, inst);
          break;
        }
      }
    } catch (const MalformedMessage&) {
    }
    return true;
  }

 private:
  struct Instance {
    bool dealt = false;
    std::optional<std::uint32_t> width;
    std::vector<std::vector<group::Element>> commitments;
    std::optional<std::vector<std::uint64_t>> raw_shares;
    bool shares_valid = false;
    bool sent_ack = false;
    bool sent_complete = false;
    bool complete = false;
    bool enabled = false;
    bool revealed = false;
    ProcessSet acks, completes, revealers;
    std::map<ProcessId, std::vector<std::uint64_t>> raw_reveals;
    std::map<ProcessId, std::vector<std::uint64_t>> good_reveals;
    std::set<std::uint32_t> wanted;
    std::map<std::uint32_t, std::uint64_t> results;
  };

  Instance& instance(ProcessId dealer, std::uint32_t slot) { return instances_[Brb::instance_of(dealer, slot)]; }

  Tag lane_tag(std::uint8_t lane, ProcessId dealer, std::uint32_t slot) const {
    return base_.with_lane(lane).with_instance(Brb::instance_of(dealer, slot));
  }

  void on_broadcast(Context& ctx, ProcessId dealer, std::uint32_t slot, const Bytes& m) {
    auto& inst = instance(dealer, slot);
    if (inst.width) return;
    try {
      Reader r(m);
      std::uint32_t width = r.u32();
      if (width == 0 || width > kMaxBatch) return;
      if (backend_ == AvssBackend::ideal) {
        r.expect_done();
        inst.width = width;
        set_complete(ctx, dealer, slot, inst);
        return;
      }
      if (r.u32() != f_ + 1) return;
      std::vector<std::vector<group::Element>> comms(width);
      for (auto& row : comms) {
        for (std::size_t k = 0; k <= f_; ++k) {
          group::Element lo = r.u64();
          group::Element hi = r.u64();
          group::Element c = (hi << 64) | lo;
          if (c == 0 || c >= group::kModulus) return;
          row.push_back(c);
        }
      }
      r.expect_done();
      inst.width = width;
      inst.commitments = std::move(comms);
    } catch (const MalformedMessage&) {
      return;
    }
    check_shares(ctx, dealer, slot, inst);
    verify_reveals(inst);
    maybe_vote(ctx, dealer, slot, inst);
  }

  void check_shares(Context& ctx, ProcessId dealer, std::uint32_t slot, Instance& inst) {
    if (!inst.width || !inst.raw_shares || inst.sent_ack) return;
    const auto& shares = *inst.raw_shares;
    if (shares.size() != *inst.width) return;
    const std::uint64_t x = ctx.self().value + 1;
    for (std::uint32_t t = 0; t < *inst.width; ++t)
      if (shares[t] >= kFieldPrime || !group::verify_share(inst.commitments[t], x, shares[t])) return;
    inst.shares_valid = true;
    inst.sent_ack = true;
    ctx.send_all(lane_tag(kAckLane, dealer, slot), Bytes{});
    maybe_reveal(ctx, dealer, slot, inst);
  }

  void maybe_vote(Context& ctx, ProcessId dealer, std::uint32_t slot, Instance& inst) {
    if (backend_ != AvssBackend::shamir) return;
    bool vote = (inst.width && inst.acks.size() >= 2 * f_ + 1) || inst.completes.size() >= f_ + 1;
    if (vote && !inst.sent_complete) {
      inst.sent_complete = true;
      ctx.send_all(lane_tag(kCompleteLane, dealer, slot), Bytes{});
    }
    if (inst.width && inst.completes.size() >= 2 * f_ + 1) set_complete(ctx, dealer, slot, inst);
  }

  void set_complete(Context& ctx, ProcessId dealer, std::uint32_t slot, Instance& inst) {
    if (inst.complete) return;
    inst.complete = true;
    if (on_complete) on_complete(ctx, dealer, slot);
    maybe_reveal(ctx, dealer, slot, inst);
    try_retrieve(ctx, dealer, slot, inst);
  }

  void maybe_reveal(Context& ctx, ProcessId dealer, std::uint32_t slot, Instance& inst) {
    if (inst.revealed || !(inst.enabled || enable_all_)) return;
    if (backend_ == AvssBackend::ideal) {
      if (!inst.complete) return;
      inst.revealed = true;
      for (std::uint32_t t = 0; t < *inst.width; ++t) ctx.vault_enable(secret_key(dealer, slot, t));
      ctx.send_all(lane_tag(kRevealLane, dealer, slot), Bytes{});
      return;
    }
    if (!inst.shares_valid) return;
    inst.revealed = true;
    Writer w;
    for (auto s : *inst.raw_shares) w.u64(s);
    ctx.send_all(lane_tag(kRevealLane, dealer, slot), w.take());
  }

  void verify_reveals(Instance& inst) {
    if (backend_ != AvssBackend::shamir || !inst.width) return;
    for (auto it = inst.raw_reveals.begin(); it != inst.raw_reveals.end();) {
      const auto& shares = it->second;
      bool ok = shares.size() == *inst.width;
      for (std::uint32_t t = 0; ok && t < *inst.width; ++t)
        ok = shares[t] < kFieldPrime && group::verify_share(inst.commitments[t], it->first.value + 1, shares[t]);
      if (ok) inst.good_reveals[it->first] = shares;
      it = inst.raw_reveals.erase(it);
    }
  }

  void try_retrieve(Context& ctx, ProcessId dealer, std::uint32_t slot, Instance& inst) {
    if (!inst.complete || inst.wanted.empty()) return;
    std::vector<std::uint32_t> ready;
    if (backend_ == AvssBackend::ideal) {
      if (inst.revealers.size() < f_ + 1) return;
      for (auto t : inst.wanted) {
        inst.results[t] = t < *inst.width ? ctx.vault_lookup(secret_key(dealer, slot, t)).value_or(0) : 0;
        ready.push_back(t);
      }
    } else {
      if (inst.good_reveals.size() < f_ + 1) return;
      for (auto t : inst.wanted) {
        std::uint64_t v = 0;
        if (t < *inst.width) {
          std::vector<std::pair<std::uint64_t, std::uint64_t>> pts;
          for (const auto& [p, shares] : inst.good_reveals) {
            pts.emplace_back(p.value + 1, shares[t]);
            if (pts.size() == f_ + 1) break;
          }
          v = interpolate_at_zero(pts, kField);
        }
        inst.results[t] = v;
        ready.push_back(t);
      }
    }
    inst.wanted.clear();
    for (auto t : ready)
      if (on_retrieved) on_retrieved(ctx, dealer, slot, t, inst.results[t]);
  }

  std::size_t n_, f_;
  Tag base_;
  AvssBackend backend_;
  Brb brb_;
  bool enable_all_ = false;
  std::map<std::uint32_t, Instance> instances_;
};

}  // namespace coinlab
