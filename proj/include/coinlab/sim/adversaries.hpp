#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "coinlab/sim/adversary.hpp"
#include "coinlab/sim/process.hpp"

namespace coinlab {

enum class Scheduling { fifo, random, delay };
enum class Corruption { none, crash, equivocate, garble, adaptive };

// Restricts a Byzantine persona to part of the network and gives it its own
// randomness.
class PersonaContext : public ForwardingContext {
 public:
  PersonaContext(Context& inner, ProcessSet audience, std::uint64_t persona, std::map<Tag, Rng>& rngs)
      : ForwardingContext(inner), audience_(audience), persona_(persona), rngs_(rngs) {}

  void send(ProcessId dst, const Tag& tag, Bytes payload) override {
    if (audience_.contains(dst)) inner_.send(dst, tag, std::move(payload));
  }
  void output(std::int64_t) override {}
  Rng& rng(const Tag& tag) override {
    auto it = rngs_.find(tag);
    if (it == rngs_.end()) {
      auto& base = inner_.rng(tag);
      it = rngs_.emplace(tag, Rng(base.next() ^ (0x5DEECE66DULL * (persona_ + 1)))).first;
    }
    return it->second;
  }

 private:
  ProcessSet audience_;
  std::uint64_t persona_;
  std::map<Tag, Rng>& rngs_;
};

// Runs two honest-looking copies that each talk to one half of the network.
class SplitBrainProcess : public Process {
 public:
  SplitBrainProcess(std::shared_ptr<Process> first, std::shared_ptr<Process> second, ProcessSet half_a,
                    ProcessSet half_b, bool first_started)
      : a_(std::move(first)), b_(std::move(second)), half_a_(half_a), half_b_(half_b), a_started_(first_started) {}

  void start(Context& ctx) override {
    ensure_started(ctx);
  }

  void receive(Context& ctx, const Envelope& env) override {
    ensure_started(ctx);
    bool to_a = !half_b_.contains(env.src);
    bool to_b = !half_a_.contains(env.src);
    try {
      if (to_a) {
        PersonaContext pa(ctx, audience_a(ctx), 0, rng_a_);
        a_->receive(pa, env);
      }
      if (to_b) {
        PersonaContext pb(ctx, audience_b(ctx), 1, rng_b_);
        b_->receive(pb, env);
      }
    } catch (const std::exception&) {
      // a confused persona just stops reacting to this message
    }
  }

 private:
  ProcessSet audience_a(Context& ctx) const {
    return ProcessSet::all(ctx.config().n).minus(half_b_);
  }
  ProcessSet audience_b(Context& ctx) const {
    ProcessSet s = ProcessSet::all(ctx.config().n).minus(half_a_);
    s.erase(ctx.self());
    return s;
  }
  void ensure_started(Context& ctx) {
    if (!a_started_) {
      a_started_ = true;
      PersonaContext pa(ctx, audience_a(ctx), 0, rng_a_);
      a_->start(pa);
    }
    if (!b_started_) {
      b_started_ = true;
      PersonaContext pb(ctx, audience_b(ctx), 1, rng_b_);
      b_->start(pb);
    }
  }

  std::shared_ptr<Process> a_, b_;
  ProcessSet half_a_, half_b_;
  bool a_started_ = false;
  bool b_started_ = false;
  std::map<Tag, Rng> rng_a_, rng_b_;
};

class GarbleContext : public ForwardingContext {
 public:
  GarbleContext(Context& inner, Rng& rng) : ForwardingContext(inner), rng_(rng) {}
  void send(ProcessId dst, const Tag& tag, Bytes payload) override {
    switch (rng_.below(4)) {
      case 0:
        break;
      case 1:
        if (!payload.empty()) payload[rng_.below(payload.size())] ^= static_cast<std::uint8_t>(1 + rng_.below(255));
        break;
      case 2:
        payload.resize(rng_.below(payload.size() + 1));
        break;
      default:
        for (auto& b : payload) b = static_cast<std::uint8_t>(rng_.below(256));
        break;
    }
    inner_.send(dst, tag, std::move(payload));
  }
  void output(std::int64_t) override {}

 private:
  Rng& rng_;
};

// Honest logic whose outgoing payloads are randomly corrupted.
class GarbleProcess : public Process {
 public:
  GarbleProcess(std::shared_ptr<Process> inner, std::uint64_t seed) : inner_(std::move(inner)), rng_(seed) {}
  void start(Context& ctx) override {
    GarbleContext g(ctx, rng_);
    inner_->start(g);
  }
  void receive(Context& ctx, const Envelope& env) override {
    GarbleContext g(ctx, rng_);
    try {
      inner_->receive(g, env);
    } catch (const std::exception&) {
    }
  }

 private:
  std::shared_ptr<Process> inner_;
  Rng rng_;
};

class StandardAdversary : public Adversary {
 public:
  StandardAdversary(Scheduling scheduling, Corruption corruption, std::string name)
      : scheduling_(scheduling), corruption_(corruption), name_(std::move(name)) {}

  std::string name() const override { return name_; }

  void reset(const SystemConfig& cfg, Rng rng) override {
    Adversary::reset(cfg, rng);
    std::vector<ProcessId> ids = cfg.processes();
    shuffle(ids);
    targets_.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(cfg.f));
    // Slow processes for the delay scheduler: f processes outside the targets.
    victims_ = ProcessSet{};
    for (std::size_t i = cfg.f; i < std::min(ids.size(), 2 * cfg.f); ++i) victims_.insert(ids[i]);
    adaptive_done_ = 0;
    adaptive_trigger_ = 50 + rng_.below(400);
  }

  std::vector<ProcessId> initial_corruptions() override {
    if (corruption_ == Corruption::none || corruption_ == Corruption::adaptive) return {};
    return targets_;
  }

  Decision choose(const AdversaryView& view) override {
    Decision d;
    d.deliver = pick(view);
    if (corruption_ == Corruption::adaptive && adaptive_done_ < targets_.size() &&
        (!view.finished().empty() || view.step() >= adaptive_trigger_)) {
      d.corrupt = targets_[adaptive_done_++];
    }
    return d;
  }

  std::shared_ptr<Process> take_over(ProcessId p, std::shared_ptr<Process> honest,
                                     const ProcessFactory& factory) override {
    Corruption mode = corruption_;
    if (mode == Corruption::adaptive) mode = rng_.below(2) == 0 ? Corruption::crash : Corruption::equivocate;
    switch (mode) {
      case Corruption::equivocate: {
        ProcessSet a, b;
        for (auto q : cfg_.processes()) {
          if (q == p) continue;
          (rng_.below(2) == 0 ? a : b).insert(q);
        }
        // The honest object keeps running as one persona, a fresh copy is the other.
        std::shared_ptr<Process> twin = factory(p);
        bool started = corruption_ == Corruption::adaptive;
        return std::make_shared<SplitBrainProcess>(honest, std::move(twin), a, b, started);
      }
      case Corruption::garble:
        return std::make_shared<GarbleProcess>(honest, rng_.next());
      default:
        return std::make_shared<SilentProcess>();
    }
  }

  const std::vector<ProcessId>& targets() const { return targets_; }

 protected:
  std::size_t pick(const AdversaryView& view) {
    const std::size_t count = view.pending_count();
    switch (scheduling_) {
      case Scheduling::fifo: {
        std::size_t best = 0;
        for (std::size_t i = 1; i < count; ++i)
          if (view.meta(i).seq < view.meta(best).seq) best = i;
        return best;
      }
      case Scheduling::delay: {
        // Prefer traffic that does not touch the slow processes.
        for (int attempt = 0; attempt < 8; ++attempt) {
          std::size_t i = rng_.below(count);
          auto m = view.meta(i);
          if (!victims_.contains(m.dst) && !victims_.contains(m.src)) return i;
        }
        return rng_.below(count);
      }
      default:
        return rng_.below(count);
    }
  }

  void shuffle(std::vector<ProcessId>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng_.below(i)]);
  }

  Scheduling scheduling_;
  Corruption corruption_;
  std::string name_;
  std::vector<ProcessId> targets_;
  ProcessSet victims_;
  std::size_t adaptive_done_ = 0;
  std::uint64_t adaptive_trigger_ = 0;
};

inline const std::vector<std::string>& adversary_names() {
  static const std::vector<std::string> names = {"fifo",       "reorder", "delay",   "crash-f",
                                                 "equivocate", "garble",  "adaptive"};
  return names;
}

inline std::unique_ptr<StandardAdversary> make_adversary(const std::string& name) {
  if (name == "fifo") return std::make_unique<StandardAdversary>(Scheduling::fifo, Corruption::none, name);
  if (name == "reorder" || name == "random")
    return std::make_unique<StandardAdversary>(Scheduling::random, Corruption::none, "reorder");
  if (name == "delay") return std::make_unique<StandardAdversary>(Scheduling::delay, Corruption::none, name);
  if (name == "crash-f" || name == "crash")
    return std::make_unique<StandardAdversary>(Scheduling::delay, Corruption::crash, "crash-f");
  if (name == "equivocate")
    return std::make_unique<StandardAdversary>(Scheduling::delay, Corruption::equivocate, name);
  if (name == "garble") return std::make_unique<StandardAdversary>(Scheduling::random, Corruption::garble, name);
  if (name == "adaptive")
    return std::make_unique<StandardAdversary>(Scheduling::delay, Corruption::adaptive, name);
  throw std::invalid_argument("unknown adversary: " + name);
}

}  // namespace coinlab
