#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "coinlab/core/bytes.hpp"
#include "coinlab/core/ids.hpp"
#include "coinlab/protocols/avss.hpp"
#include "coinlab/protocols/brb.hpp"
#include "coinlab/sim/process.hpp"

namespace coinlab {

// Random secret draw. Every process deals one contribution per target; the
// value of target j is the sum mod D of the contributions of the n-f dealers
// that j announced, so it stays hidden until retrieval is enabled.
class Rsd {
 public:
  using AssignedFn = std::function<void(Context&, ProcessId target)>;
  using ValuesFn = std::function<void(Context&, const std::map<ProcessId, std::uint64_t>&)>;

  static constexpr std::uint8_t kSetLane = 5;

  Rsd(const SystemConfig& cfg, Tag base, std::uint64_t domain, AvssBackend backend)
      : n_(cfg.n), f_(cfg.f), domain_(domain), base_(base), avss_(cfg, base, backend), sets_(cfg, base.with_lane(kSetLane)) {
    avss_.on_complete = [this](Context& ctx, ProcessId dealer, std::uint32_t) { on_sharing_complete(ctx, dealer); };
    avss_.on_retrieved = [this](Context& ctx, ProcessId dealer, std::uint32_t, std::uint32_t target,
                                std::uint64_t v) { on_retrieved(ctx, dealer, ProcessId{target}, v); };
    sets_.on_deliver = [this](Context& ctx, ProcessId leader, std::uint32_t, const Bytes& m) {
      on_set(ctx, leader, m);
    };
    announced_.resize(n_);
    contributions_.resize(n_);
  }

  AssignedFn on_value_assigned;

  std::uint64_t domain() const { return domain_; }

  void start(Context& ctx) {
    if (started_) return;
    started_ = true;
    Rng& rng = ctx.rng(base_.with_lane(kSetLane).with_instance(0xFFFFFFFF));
    dealt_.clear();
    for (std::size_t j = 0; j < n_; ++j) dealt_.push_back(rng.below(domain_));
    avss_.share(ctx, 0, dealt_);
  }

  void enable(Context& ctx) { avss_.enable_all(ctx); }

  // Asynchronous: the callback fires once every member of S is assigned and
  // all its contributions are retrieved.
  void retrieve_values(Context& ctx, ProcessSet targets, ValuesFn done) {
    requests_.push_back(Request{targets, std::move(done), false});
    for (auto j : targets.members()) request_target(ctx, j);
    finish_requests(ctx);
  }

  bool assigned(ProcessId j) const { return assigned_.contains(j); }
  ProcessSet assigned_set() const { return assigned_; }
  ProcessSet sources() const { return sources_; }
  std::optional<ProcessSet> announced(ProcessId j) const { return announced_[j.value]; }
  const std::vector<std::uint64_t>& dealt() const { return dealt_; }
  std::optional<std::uint64_t> value(ProcessId j) const {
    auto it = values_.find(j);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }
  Avss& avss() { return avss_; }

  bool handle(Context& ctx, const Envelope& env) {
    if (sets_.handle(ctx, env)) return true;
    return avss_.handle(ctx, env);
  }

 private:
  struct Request {
    ProcessSet targets;
    ValuesFn done;
    bool finished;
  };

  void on_sharing_complete(Context& ctx, ProcessId dealer) {
    sources_.insert(dealer);
    if (!broadcast_ && sources_.size() == n_ - f_) {
      broadcast_ = true;
      Writer w;
      w.u64(sources_.bits());
      sets_.broadcast(ctx, 0, w.take());
    }
    for (std::uint32_t j = 0; j < n_; ++j) check_assigned(ctx, ProcessId{j});
  }

  void on_set(Context& ctx, ProcessId leader, const Bytes& m) {
    try {
      Reader r(m);
      ProcessSet s(r.u64());
      r.expect_done();
      if (s.size() != n_ - f_ || !s.subset_of(ProcessSet::all(n_))) return;
      announced_[leader.value] = s;
    } catch (const MalformedMessage&) {
      return;
    }
    check_assigned(ctx, leader);
  }

  void check_assigned(Context& ctx, ProcessId j) {
    if (assigned_.contains(j) || !announced_[j.value]) return;
    for (auto k : announced_[j.value]->members())
      if (!avss_.complete(k, 0)) return;
    assigned_.insert(j);
    if (on_value_assigned) on_value_assigned(ctx, j);
    if (requested_.contains(j)) fetch_target(ctx, j);
  }

  void request_target(Context& ctx, ProcessId j) {
    if (requested_.contains(j)) return;
    requested_.insert(j);
    if (assigned_.contains(j)) fetch_target(ctx, j);
  }

  void fetch_target(Context& ctx, ProcessId j) {
    for (auto k : announced_[j.value]->members()) avss_.retrieve(ctx, k, 0, j.value);
  }

  void on_retrieved(Context& ctx, ProcessId dealer, ProcessId target, std::uint64_t v) {
    if (target.value >= n_) return;
    contributions_[target.value][dealer] = v % domain_;
    const auto& set = announced_[target.value];
    if (!set || values_.count(target)) return;
    std::uint64_t sum = 0;
    for (auto k : set->members()) {
      auto it = contributions_[target.value].find(k);
      if (it == contributions_[target.value].end()) return;
      sum = (sum + it->second) % domain_;
    }
    values_[target] = sum;
    finish_requests(ctx);
  }

  void finish_requests(Context& ctx) {
    for (std::size_t i = 0; i < requests_.size(); ++i) {
      if (requests_[i].finished) continue;
      std::map<ProcessId, std::uint64_t> out;
      bool ready = true;
      for (auto j : requests_[i].targets.members()) {
        auto it = values_.find(j);
        if (it == values_.end()) {
          ready = false;
          break;
        }
        out[j] = it->second;
      }
      if (!ready) continue;
      requests_[i].finished = true;
      auto done = requests_[i].done;
      done(ctx, out);
    }
  }

  std::size_t n_, f_;
  std::uint64_t domain_;
  Tag base_;
  Avss avss_;
  Brb sets_;
  bool started_ = false;
  bool broadcast_ = false;
  std::vector<std::uint64_t> dealt_;
  ProcessSet sources_, assigned_, requested_;
  std::vector<std::optional<ProcessSet>> announced_;
  std::vector<std::map<ProcessId, std::uint64_t>> contributions_;
  std::map<ProcessId, std::uint64_t> values_;
  std::vector<Request> requests_;
};

}  // namespace coinlab
