#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "coinlab/core/bytes.hpp"
#include "coinlab/core/digest.hpp"
#include "coinlab/core/ids.hpp"
#include "coinlab/sim/process.hpp"

namespace coinlab {

struct BrbThresholds {
  std::size_t echo_to_ready;
  std::size_t ready_amplify;
  std::size_t deliver;
};

inline BrbThresholds brb_thresholds(std::size_t n, std::size_t f) {
  return BrbThresholds{(n + f + 2) / 2, f + 1, 2 * f + 1};
}

// Bracha broadcast for many instances sharing one (session, module, lane).
// An instance is identified by (leader, slot). Echo and ready votes carry a
// digest; a process that reaches the delivery quorum without the payload
// asks for it with FETCH and gets FILL back from a holder.
class Brb {
 public:
  using DeliverFn = std::function<void(Context&, ProcessId leader, std::uint32_t slot, const Bytes&)>;

  Brb(const SystemConfig& cfg, Tag base) : n_(cfg.n), th_(brb_thresholds(cfg.n, cfg.f)), base_(base) {}

  DeliverFn on_deliver;

  static std::uint32_t instance_of(ProcessId leader, std::uint32_t slot) { return slot * 64 + leader.value; }

  void broadcast(Context& ctx, std::uint32_t slot, Bytes m) {
    auto& st = states_[instance_of(ctx.self(), slot)];
    if (st.broadcast) throw std::logic_error("double broadcast on one instance");
    st.broadcast = true;
    Writer w;
    w.u8(kSend).raw(m);
    ctx.send_all(tag(ctx.self(), slot), w.take());
  }

  bool owns(const Tag& t) const {
    return t.session == base_.session && t.module == base_.module && t.lane == base_.lane;
  }

  // Returns false when the envelope is not for this engine.
  bool handle(Context& ctx, const Envelope& env) {
    if (!owns(env.tag)) return false;
    if (env.payload.empty()) return true;
    const std::uint32_t inst = env.tag.instance;
    const ProcessId leader{inst % 64};
    if (leader.value >= n_) return true;
    auto& st = states_[inst];
    std::span<const std::uint8_t> body(env.payload.data() + 1, env.payload.size() - 1);
    switch (env.payload[0]) {
      case kSend:
        if (env.src != leader || st.got_send) break;
        st.got_send = true;
        {
          Digest d = digest_of(body);
          remember(st, d, body);
          if (!st.sent_echo) {
            st.sent_echo = true;
            vote(ctx, env.tag, kEcho, d);
          }
          if (st.target && *st.target == d) finish(ctx, st, leader, inst / 64);
        }
        break;
      case kEcho: {
        auto d = read_digest(body);
        if (!d || st.echoed.contains(env.src)) break;
        st.echoed.insert(env.src);
        auto& votes = tally(st.echoes, *d);
        votes.insert(env.src);
        if (votes.size() >= th_.echo_to_ready && !st.sent_ready) {
          st.sent_ready = true;
          vote(ctx, env.tag, kReady, *d);
        }
        break;
      }
      case kReady: {
        auto d = read_digest(body);
        if (!d || st.readied.contains(env.src)) break;
        st.readied.insert(env.src);
        auto& votes = tally(st.readies, *d);
        votes.insert(env.src);
        if (votes.size() >= th_.ready_amplify && !st.sent_ready) {
          st.sent_ready = true;
          vote(ctx, env.tag, kReady, *d);
        }
        if (votes.size() >= th_.deliver && !st.target) {
          st.target = *d;
          if (!finish(ctx, st, leader, inst / 64)) vote(ctx, env.tag, kFetch, *d);
        }
        break;
      }
      case kFetch: {
        auto d = read_digest(body);
        if (!d || st.served.contains(env.src)) break;
        for (const auto& [pd, payload] : st.payloads) {
          if (pd != *d) continue;
          st.served.insert(env.src);
          Writer w;
          w.u8(kFill).raw(payload);
          ctx.send(env.src, env.tag, w.take());
        }
        break;
      }
      case kFill: {
        if (!st.target || st.delivered) break;
        Digest d = digest_of(body);
        if (d != *st.target) break;
        remember(st, d, body);
        finish(ctx, st, leader, inst / 64);
        break;
      }
      default:
        break;
    }
    return true;
  }

  bool delivered(ProcessId leader, std::uint32_t slot) const {
    auto it = states_.find(instance_of(leader, slot));
    return it != states_.end() && it->second.delivered;
  }

 private:
  static constexpr std::uint8_t kSend = 1, kEcho = 2, kReady = 3, kFetch = 4, kFill = 5;

  struct State {
    bool broadcast = false;
    bool got_send = false;
    bool sent_echo = false;
    bool sent_ready = false;
    bool delivered = false;
    ProcessSet echoed, readied, served;
    std::vector<std::pair<Digest, ProcessSet>> echoes, readies;
    std::vector<std::pair<Digest, Bytes>> payloads;
    std::optional<Digest> target;
  };

  Tag tag(ProcessId leader, std::uint32_t slot) const { return base_.with_instance(instance_of(leader, slot)); }

  static std::optional<Digest> read_digest(std::span<const std::uint8_t> body) {
    if (body.size() != sizeof(Digest)) return std::nullopt;
    Digest d{};
    std::copy(body.begin(), body.end(), d.begin());
    return d;
  }

  static ProcessSet& tally(std::vector<std::pair<Digest, ProcessSet>>& v, const Digest& d) {
    for (auto& [vd, set] : v)
      if (vd == d) return set;
    v.emplace_back(d, ProcessSet{});
    return v.back().second;
  }

  static void remember(State& st, const Digest& d, std::span<const std::uint8_t> body) {
    for (const auto& [pd, payload] : st.payloads)
      if (pd == d) return;
    st.payloads.emplace_back(d, Bytes(body.begin(), body.end()));
  }

  void vote(Context& ctx, const Tag& t, std::uint8_t kind, const Digest& d) {
    Writer w;
    w.u8(kind).raw(d);
    ctx.send_all(t, w.take());
  }

  bool finish(Context& ctx, State& st, ProcessId leader, std::uint32_t slot) {
    if (st.delivered || !st.target) return st.delivered;
    for (const auto& [pd, payload] : st.payloads) {
      if (pd != *st.target) continue;
      st.delivered = true;
      Bytes copy = payload;
      if (on_deliver) on_deliver(ctx, leader, slot, copy);
      return true;
    }
    return false;
  }

  std::size_t n_;
  BrbThresholds th_;
  Tag base_;
  std::map<std::uint32_t, State> states_;
};

}  // namespace coinlab
