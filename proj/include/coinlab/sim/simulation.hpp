#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coinlab/core/digest.hpp"
#include "coinlab/core/ids.hpp"
#include "coinlab/core/rng.hpp"
#include "coinlab/sim/adversary.hpp"
#include "coinlab/sim/process.hpp"
#include "coinlab/sim/trace.hpp"
#include "coinlab/sim/vault.hpp"

namespace coinlab {

struct RunOptions {
  std::uint64_t step_budget = 10'000'000;
  bool keep_events = false;
  bool hash = true;
  bool drain = false;  // keep delivering after the last output until nothing is pending
};

class Simulation {
 public:
  Simulation(SystemConfig cfg, ProcessFactory factory, Adversary& adversary, RunOptions opts = {})
      : cfg_(cfg), factory_(std::move(factory)), adversary_(adversary), opts_(opts) {
    cfg_.validate();
  }

  Trace run() {
    const std::size_t n = cfg_.n;
    trace_ = Trace{};
    trace_.config = cfg_;
    trace_.outputs.assign(n, std::nullopt);
    trace_.output_step.assign(n, 0);
    trace_.output_depth.assign(n, 0);
    honest_.clear();
    live_.clear();
    rngs_.assign(n, {});
    depth_.assign(n, 0);
    pending_.clear();
    pos_.clear();
    done_.clear();
    oldest_ = 0;
    step_ = 0;
    vault_ = IdealVault{};
    finished_ = ProcessSet{};
    correct_outputs_ = 0;

    adversary_.reset(cfg_, Rng(derive_seed(cfg_.master_seed, 0xAD7E25A1ULL)));
    for (std::uint32_t i = 0; i < n; ++i) {
      std::shared_ptr<Process> p = factory_(ProcessId{i});
      honest_.push_back(p);
      live_.push_back(p);
    }
    for (auto p : adversary_.initial_corruptions()) corrupt(p);
    for (std::uint32_t i = 0; i < n; ++i) {
      Ctx ctx(*this, ProcessId{i});
      live_[i]->start(ctx);
    }

    const std::uint64_t age_limit = 64ULL * n * n;
    while (correct_outputs_ < n - trace_.corrupted.size()) {
      if (pending_.empty()) throw NonTermination(idle_report());
      if (step_ >= opts_.step_budget) throw NonTermination("step budget exhausted; oldest pending tag " +
                                                           pending_[pos_[oldest_pending()]].tag.to_string());
      std::size_t index;
      std::uint64_t old_seq = oldest_pending();
      const Envelope& oldest = pending_[pos_[old_seq]];
      if (step_ - oldest.enqueue_step >= age_limit) {
        index = pos_[old_seq];
      } else {
        AdversaryView view(cfg_, pending_, step_, trace_.corrupted, finished_, vault_);
        Decision d = adversary_.choose(view);
        if (d.corrupt) corrupt(*d.corrupt);
        index = d.deliver < pending_.size() ? d.deliver : pos_[oldest_pending()];
      }
      deliver(index);
    }
    while (opts_.drain && !pending_.empty()) {
      if (step_ >= opts_.step_budget) throw NonTermination("step budget exhausted while draining");
      AdversaryView view(cfg_, pending_, step_, trace_.corrupted, finished_, vault_);
      Decision d = adversary_.choose(view);
      deliver(d.deliver < pending_.size() ? d.deliver : pos_[oldest_pending()]);
    }
    trace_.steps = step_;
    if (opts_.hash) trace_.hash = to_hex(hasher_.finish());
    return std::move(trace_);
  }

  Process& process(ProcessId p) { return *honest_.at(p.value); }
  template <class T>
  T& process_as(ProcessId p) {
    return dynamic_cast<T&>(process(p));
  }
  const IdealVault& vault() const { return vault_; }
  bool is_corrupted(ProcessId p) const { return trace_.corrupted.contains(p); }

 private:
  class Ctx : public Context {
   public:
    Ctx(Simulation& sim, ProcessId self) : sim_(sim), self_(self) {}
    ProcessId self() const override { return self_; }
    const SystemConfig& config() const override { return sim_.cfg_; }
    std::uint64_t step() const override { return sim_.step_; }
    void send(ProcessId dst, const Tag& tag, Bytes payload) override {
      sim_.enqueue(self_, dst, tag, std::move(payload));
    }
    void output(std::int64_t value) override { sim_.record_output(self_, value); }
    void mark(std::string_view label, std::int64_t value) override { sim_.record_mark(self_, label, value); }
    Rng& rng(const Tag& tag) override {
      auto& m = sim_.rngs_[self_.value];
      auto it = m.find(tag);
      if (it == m.end()) it = m.emplace(tag, process_rng(sim_.cfg_.master_seed, self_, tag)).first;
      return it->second;
    }
    void vault_deposit(const Tag& key, std::uint64_t secret) override { sim_.vault_.deposit(key, self_, secret); }
    void vault_enable(const Tag& key) override { sim_.vault_.enable(key, !sim_.trace_.corrupted.contains(self_)); }
    std::optional<std::uint64_t> vault_lookup(const Tag& key) const override { return sim_.vault_.lookup(key); }

   private:
    Simulation& sim_;
    ProcessId self_;
  };

  void record(TraceEvent e) {
    if (opts_.hash) hasher_.add(e.line());
    if (opts_.keep_events) trace_.events.push_back(std::move(e));
  }

  void enqueue(ProcessId src, ProcessId dst, const Tag& tag, Bytes payload) {
    if (dst.value >= cfg_.n) return;
    Envelope e;
    e.src = src;
    e.dst = dst;
    e.tag = tag;
    e.seq = done_.size();
    e.enqueue_step = step_;
    e.depth = depth_[src.value] + 1;
    e.payload = std::move(payload);
    auto& c = trace_.sent[tag.family()];
    c.messages += 1;
    c.bits += 8ULL * e.payload.size();
    if (opts_.hash || opts_.keep_events)
      record(TraceEvent{step_, EventKind::send, src, dst, tag, static_cast<std::uint32_t>(e.payload.size()),
                        fnv1a64(e.payload), {}});
    done_.push_back(false);
    pos_.push_back(pending_.size());
    pending_.push_back(std::move(e));
  }

  std::uint64_t oldest_pending() {
    while (done_[oldest_]) ++oldest_;
    return oldest_;
  }

  void deliver(std::size_t index) {
    Envelope env = std::move(pending_[index]);
    if (index + 1 != pending_.size()) {
      pending_[index] = std::move(pending_.back());
      pos_[pending_[index].seq] = index;
    }
    pending_.pop_back();
    done_[env.seq] = true;
    ++step_;

    const std::uint64_t skipped = step_ - 1 - env.enqueue_step;
    if (!trace_.corrupted.contains(env.src) && !trace_.corrupted.contains(env.dst))
      trace_.max_correct_skip = std::max(trace_.max_correct_skip, skipped);
    auto& c = trace_.delivered[env.tag.family()];
    c.messages += 1;
    c.bits += 8ULL * env.payload.size();
    if (opts_.hash || opts_.keep_events)
      record(TraceEvent{step_, EventKind::deliver, env.src, env.dst, env.tag,
                        static_cast<std::uint32_t>(env.payload.size()), fnv1a64(env.payload), {}});

    auto& d = depth_[env.dst.value];
    d = std::max(d, env.depth);
    // Hold a reference: a take-over during receive must not free the target.
    std::shared_ptr<Process> target = live_[env.dst.value];
    Ctx ctx(*this, env.dst);
    target->receive(ctx, env);
  }

  void corrupt(ProcessId p) {
    if (p.value >= cfg_.n || trace_.corrupted.contains(p)) return;
    if (trace_.corrupted.size() >= cfg_.f) {
      ++trace_.rejected_corruptions;
      record(TraceEvent{step_, EventKind::reject, p, p, Tag{}, 0, 0, {}});
      return;
    }
    trace_.corrupted.insert(p);
    if (trace_.outputs[p.value]) --correct_outputs_;
    record(TraceEvent{step_, EventKind::corrupt, p, p, Tag{}, 0, 0, {}});
    live_[p.value] = adversary_.take_over(p, honest_[p.value], factory_);
  }

  void record_output(ProcessId p, std::int64_t value) {
    if (trace_.outputs[p.value]) return;
    trace_.outputs[p.value] = value;
    trace_.output_step[p.value] = step_;
    trace_.output_depth[p.value] = depth_[p.value];
    finished_.insert(p);
    if (!trace_.corrupted.contains(p)) ++correct_outputs_;
    record(TraceEvent{step_, EventKind::output, p, p, Tag{}, 0, static_cast<std::uint64_t>(value), {}});
  }

  void record_mark(ProcessId p, std::string_view label, std::int64_t value) {
    trace_.marks.push_back(Mark{step_, p, std::string(label), value, depth_[p.value]});
    record(TraceEvent{step_, EventKind::mark, p, p, Tag{}, 0, static_cast<std::uint64_t>(value), std::string(label)});
  }

  std::string idle_report() const {
    std::string s = "no pending messages; waiting processes";
    for (std::uint32_t i = 0; i < cfg_.n; ++i)
      if (!trace_.corrupted.contains(ProcessId{i}) && !trace_.outputs[i]) s += " " + std::to_string(i);
    return s;
  }

  SystemConfig cfg_;
  ProcessFactory factory_;
  Adversary& adversary_;
  RunOptions opts_;

  Trace trace_;
  std::vector<std::shared_ptr<Process>> honest_;
  std::vector<std::shared_ptr<Process>> live_;
  std::vector<std::map<Tag, Rng>> rngs_;
  std::vector<std::uint32_t> depth_;
  std::vector<Envelope> pending_;
  std::vector<std::size_t> pos_;
  std::vector<bool> done_;
  std::uint64_t oldest_ = 0;
  std::uint64_t step_ = 0;
  IdealVault vault_;
  ProcessSet finished_;
  std::size_t correct_outputs_ = 0;
  LineHasher hasher_;
};

inline Trace run_simulation(const SystemConfig& cfg, ProcessFactory factory, Adversary& adversary,
                            RunOptions opts = {}) {
  Simulation sim(cfg, std::move(factory), adversary, opts);
  return sim.run();
}

}  // namespace coinlab
