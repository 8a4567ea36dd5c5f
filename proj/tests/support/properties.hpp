#pragma once

// Randomized property suites for the building blocks. Each run picks an
// adversary from the standard list, runs until quiescence where totality
// matters, then checks the trace against the module's guarantees.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coinlab/coinlab.hpp"

namespace coinlab::props {

struct SuiteResult {
  std::size_t runs = 0;
  std::size_t violations = 0;
  std::size_t stalls = 0;
  std::vector<std::string> notes;

  void fail(std::uint64_t seed, const std::string& adversary, const std::string& what) {
    ++violations;
    if (notes.size() < 8) notes.push_back("seed " + std::to_string(seed) + " [" + adversary + "] " + what);
  }
  bool clean() const { return violations == 0 && stalls == 0; }
};

// Wraps a standard adversary and watches what it could learn about correct
// dealers' secrets.
class SpyAdversary : public Adversary {
 public:
  explicit SpyAdversary(std::unique_ptr<StandardAdversary> inner) : inner_(std::move(inner)) {}

  std::vector<Tag> secret_keys;  // vault keys of the dealers to watch
  std::optional<std::uint64_t> first_release;
  std::optional<std::uint64_t> first_reveal;  // first correct reveal envelope seen pending
  std::map<ProcessId, std::uint64_t> corrupted_at;

  std::string name() const override { return inner_->name(); }
  void reset(const SystemConfig& cfg, Rng rng) override {
    Adversary::reset(cfg, rng);
    inner_->reset(cfg, rng);
    first_release.reset();
    first_reveal.reset();
    corrupted_at.clear();
  }
  std::vector<ProcessId> initial_corruptions() override {
    auto v = inner_->initial_corruptions();
    for (auto p : v) corrupted_at.try_emplace(p, 0);
    return v;
  }
  Decision choose(const AdversaryView& view) override {
    if (!first_release)
      for (const auto& k : secret_keys)
        if (auto d = k.instance >> 6 & 63; !view.corrupted().contains(ProcessId{d}) && view.released_secret(k)) {
          first_release = view.step();
          break;
        }
    if (!first_reveal)
      for (std::size_t i = 0; i < view.pending_count(); ++i) {
        auto m = view.meta(i);
        if (m.tag.module == Module::avss && m.tag.lane == Avss::kRevealLane && !view.corrupted().contains(m.src)) {
          first_reveal = m.enqueue_step;
          break;
        }
      }
    Decision d = inner_->choose(view);
    if (d.corrupt) corrupted_at.try_emplace(*d.corrupt, view.step());
    return d;
  }
  std::shared_ptr<Process> take_over(ProcessId p, std::shared_ptr<Process> honest,
                                     const ProcessFactory& factory) override {
    return inner_->take_over(p, std::move(honest), factory);
  }

 private:
  std::unique_ptr<StandardAdversary> inner_;
};

inline const std::string& adversary_for(std::uint64_t run) {
  const auto& names = adversary_names();
  return names[run % names.size()];
}

inline RunOptions drained() {
  RunOptions o;
  o.drain = true;
  o.hash = false;
  return o;
}

// ---- BRB -------------------------------------------------------------------

class BrbProbe : public Process {
 public:
  explicit BrbProbe(const SystemConfig& cfg) : n_(cfg.n), f_(cfg.f), brb_(cfg, Tag{0, Module::test, 0, 0}) {
    brb_.on_deliver = [this](Context& ctx, ProcessId leader, std::uint32_t, const Bytes& m) {
      delivered[leader] = m;
      if (delivered.size() >= n_ - f_) ctx.output(1);
    };
  }
  void start(Context& ctx) override {
    Writer w;
    w.u32(ctx.self().value).u64(ctx.rng(Tag{0, Module::test, 0, 0}).next());
    sent = w.take();
    brb_.broadcast(ctx, 0, sent);
  }
  void receive(Context& ctx, const Envelope& env) override { brb_.handle(ctx, env); }

  Bytes sent;
  std::map<ProcessId, Bytes> delivered;

 private:
  std::size_t n_, f_;
  Brb brb_;
};

inline SuiteResult brb_suite(std::size_t n, std::size_t runs, std::uint64_t seed) {
  SuiteResult out;
  for (std::uint64_t r = 0; r < runs; ++r) {
    SystemConfig cfg{n, (n - 1) / 3, 32, derive_seed(seed, r)};
    auto adv = make_adversary(adversary_for(r));
    Simulation sim(cfg, [cfg](ProcessId) { return std::make_unique<BrbProbe>(cfg); }, *adv, drained());
    Trace t;
    try {
      t = sim.run();
    } catch (const NonTermination&) {
      ++out.stalls;
      continue;
    }
    ++out.runs;
    auto correct = t.correct();
    for (std::uint32_t l = 0; l < n; ++l) {
      ProcessId leader{l};
      std::optional<Bytes> seen;
      std::size_t holders = 0;
      for (auto p : correct) {
        const auto& d = sim.process_as<BrbProbe>(p).delivered;
        auto it = d.find(leader);
        if (it == d.end()) continue;
        ++holders;
        if (seen && *seen != it->second) out.fail(cfg.master_seed, adv->name(), "consistency: leader " + std::to_string(l));
        seen = it->second;
      }
      if (holders && holders != correct.size())
        out.fail(cfg.master_seed, adv->name(), "totality: leader " + std::to_string(l));
      if (!t.corrupted.contains(leader)) {
        const Bytes& m = sim.process_as<BrbProbe>(leader).sent;
        if (holders != correct.size() || (seen && *seen != m))
          out.fail(cfg.master_seed, adv->name(), "validity: leader " + std::to_string(l));
      }
    }
  }
  return out;
}

// ---- AVSS ------------------------------------------------------------------

class AvssProbe : public Process {
 public:
  AvssProbe(const SystemConfig& cfg, AvssBackend backend)
      : n_(cfg.n), f_(cfg.f), avss_(cfg, Tag{0, Module::avss, 0, 0}, backend) {
    avss_.on_complete = [this](Context& ctx, ProcessId dealer, std::uint32_t) {
      completed.insert(dealer);
      if (!enable_step && completed.size() >= n_ - f_) {
        enable_step = ctx.step();
        ctx.mark("enable", 0);
        avss_.enable_all(ctx);
        for (auto d : completed.members()) avss_.retrieve(ctx, d, 0, 0);
      } else if (enable_step) {
        avss_.retrieve(ctx, dealer, 0, 0);
      }
    };
    avss_.on_retrieved = [this](Context& ctx, ProcessId dealer, std::uint32_t, std::uint32_t, std::uint64_t v) {
      retrieved[dealer] = v;
      if (retrieved.size() >= n_ - f_) ctx.output(1);
    };
  }
  void start(Context& ctx) override {
    secret = ctx.rng(Tag{0, Module::test, 1, 0}).below(kFieldPrime);
    avss_.share(ctx, 0, {secret});
  }
  void receive(Context& ctx, const Envelope& env) override { avss_.handle(ctx, env); }
  const Avss& avss() const { return avss_; }

  std::uint64_t secret = 0;
  ProcessSet completed;
  std::optional<std::uint64_t> enable_step;
  std::map<ProcessId, std::uint64_t> retrieved;

 private:
  std::size_t n_, f_;
  Avss avss_;
};

inline SuiteResult avss_suite(std::size_t n, std::size_t runs, std::uint64_t seed) {
  SuiteResult out;
  for (std::uint64_t r = 0; r < runs; ++r) {
    SystemConfig cfg{n, (n - 1) / 3, 32, derive_seed(seed, r)};
    const AvssBackend backend = r % 2 ? AvssBackend::shamir : AvssBackend::ideal;
    SpyAdversary spy(make_adversary(adversary_for(r)));
    Avss keys(cfg, Tag{0, Module::avss, 0, 0}, backend);
    for (std::uint32_t d = 0; d < n; ++d) spy.secret_keys.push_back(keys.secret_key(ProcessId{d}, 0, 0));
    Simulation sim(cfg, [cfg, backend](ProcessId) { return std::make_unique<AvssProbe>(cfg, backend); }, spy,
                   drained());
    Trace t;
    try {
      t = sim.run();
    } catch (const NonTermination&) {
      ++out.stalls;
      continue;
    }
    ++out.runs;
    const std::string who = spy.name() + "/" + backend_name(backend);
    auto correct = t.correct();
    std::optional<std::uint64_t> first_enable;
    // Enables count only while the enabling process was still correct.
    for (std::uint32_t i = 0; i < n; ++i) {
      auto e = sim.process_as<AvssProbe>(ProcessId{i}).enable_step;
      auto c = spy.corrupted_at.find(ProcessId{i});
      if (!e || (c != spy.corrupted_at.end() && c->second <= *e)) continue;
      if (!first_enable || *e < *first_enable) first_enable = e;
    }
    // Nothing about a correct dealer's secret may leave before some correct process enables.
    if (spy.first_release && (!first_enable || *spy.first_release < *first_enable))
      out.fail(cfg.master_seed, who, "secrecy: vault released early");
    if (spy.first_reveal && (!first_enable || *spy.first_reveal < *first_enable))
      out.fail(cfg.master_seed, who, "secrecy: reveal before enable");
    for (std::uint32_t d = 0; d < n; ++d) {
      ProcessId dealer{d};
      std::optional<std::uint64_t> value;
      std::size_t complete = 0, got = 0;
      for (auto p : correct) {
        const auto& probe = sim.process_as<AvssProbe>(p);
        complete += probe.completed.contains(dealer);
        auto it = probe.retrieved.find(dealer);
        if (it == probe.retrieved.end()) continue;
        ++got;
        if (value && *value != it->second) out.fail(cfg.master_seed, who, "binding: dealer " + std::to_string(d));
        value = it->second;
      }
      if (complete && (complete != correct.size() || got != correct.size()))
        out.fail(cfg.master_seed, who, "completion totality: dealer " + std::to_string(d));
      if (!t.corrupted.contains(dealer)) {
        if (complete != correct.size() || value != sim.process_as<AvssProbe>(dealer).secret)
          out.fail(cfg.master_seed, who, "validity: dealer " + std::to_string(d));
      }
    }
  }
  return out;
}

// ---- RSD -------------------------------------------------------------------

class RsdProbe : public Process {
 public:
  static constexpr std::uint64_t kDomain = 10;

  RsdProbe(const SystemConfig& cfg, AvssBackend backend)
      : n_(cfg.n), f_(cfg.f), rsd_(cfg, Tag{0, Module::rsd, 0, 0}, kDomain, backend) {
    rsd_.on_value_assigned = [this](Context& ctx, ProcessId) {
      if (requested || rsd_.assigned_set().size() < n_ - f_) return;
      requested = true;
      rsd_.enable(ctx);
      rsd_.retrieve_values(ctx, rsd_.assigned_set(), [this](Context& c, const std::map<ProcessId, std::uint64_t>& v) {
        values = v;
        c.output(1);
      });
    };
  }
  void start(Context& ctx) override { rsd_.start(ctx); }
  void receive(Context& ctx, const Envelope& env) override { rsd_.handle(ctx, env); }
  const Rsd& rsd() const { return rsd_; }

  bool requested = false;
  std::map<ProcessId, std::uint64_t> values;

 private:
  std::size_t n_, f_;
  Rsd rsd_;
};

inline SuiteResult rsd_suite(std::size_t n, std::size_t runs, std::uint64_t seed) {
  SuiteResult out;
  for (std::uint64_t r = 0; r < runs; ++r) {
    SystemConfig cfg{n, (n - 1) / 3, 32, derive_seed(seed, r)};
    const AvssBackend backend = r % 4 == 3 ? AvssBackend::shamir : AvssBackend::ideal;
    auto adv = make_adversary(adversary_for(r));
    Simulation sim(cfg, [cfg, backend](ProcessId) { return std::make_unique<RsdProbe>(cfg, backend); }, *adv,
                   drained());
    Trace t;
    try {
      t = sim.run();
    } catch (const NonTermination&) {
      ++out.stalls;
      continue;
    }
    ++out.runs;
    const std::string who = adv->name() + "/" + backend_name(backend);
    auto correct = t.correct();
    Avss keys(cfg, Tag{0, Module::rsd, 0, 0}, backend);
    for (std::uint32_t j = 0; j < n; ++j) {
      ProcessId target{j};
      std::optional<ProcessSet> sources;
      std::optional<std::uint64_t> value;
      std::size_t assigned = 0;
      for (auto p : correct) {
        const auto& probe = sim.process_as<RsdProbe>(p);
        if (!probe.rsd().assigned(target)) continue;
        ++assigned;
        auto s = probe.rsd().announced(target);
        if (sources && s != sources) out.fail(cfg.master_seed, who, "assignment differs: " + std::to_string(j));
        sources = s;
        auto it = probe.values.find(target);
        if (it == probe.values.end()) continue;
        if (value && *value != it->second) out.fail(cfg.master_seed, who, "binding: value " + std::to_string(j));
        value = it->second;
      }
      if (assigned && assigned != correct.size())
        out.fail(cfg.master_seed, who, "notification totality: " + std::to_string(j));
      if (!t.corrupted.contains(target) && assigned != correct.size())
        out.fail(cfg.master_seed, who, "assignment termination: " + std::to_string(j));
      if (value && sources && backend == AvssBackend::ideal) {
        // Replay: the value is the sum of the contributions bound by S_j.
        std::uint64_t sum = 0;
        for (auto k : sources->members())
          sum = (sum + sim.vault().lookup(keys.secret_key(k, 0, j)).value_or(0) % RsdProbe::kDomain) %
                RsdProbe::kDomain;
        if (sum != *value) out.fail(cfg.master_seed, who, "replay mismatch: " + std::to_string(j));
      }
    }
  }
  return out;
}

// ---- Gather ----------------------------------------------------------------

class GatherProbe : public Process {
 public:
  explicit GatherProbe(const SystemConfig& cfg)
      : hello_(cfg, Tag{0, Module::test, 1, 0}),
        gather_(cfg, Tag{0, Module::gather, 0, 0}, [this](ProcessId j) { return accepted_.contains(j); }) {
    hello_.on_deliver = [this](Context& ctx, ProcessId leader, std::uint32_t, const Bytes&) {
      accepted_.insert(leader);
      gather_.accept_changed(ctx);
    };
    gather_.on_output = [](Context& ctx, ProcessSet s) { ctx.output(static_cast<std::int64_t>(s.bits())); };
  }
  void start(Context& ctx) override {
    hello_.broadcast(ctx, 0, Bytes{1});
    gather_.start(ctx);
  }
  void receive(Context& ctx, const Envelope& env) override {
    if (!hello_.handle(ctx, env)) gather_.handle(ctx, env);
  }
  const Gather& gather() const { return gather_; }

 private:
  Brb hello_;
  ProcessSet accepted_;
  Gather gather_;
};

inline SuiteResult gather_suite(std::size_t n, std::size_t runs, std::uint64_t seed) {
  SuiteResult out;
  for (std::uint64_t r = 0; r < runs; ++r) {
    SystemConfig cfg{n, (n - 1) / 3, 32, derive_seed(seed, r)};
    // Every other run uses the adaptive adversary, which corrupts around the first output.
    auto adv = make_adversary(r % 2 ? std::string("adaptive") : adversary_for(r / 2));
    Simulation sim(cfg, [cfg](ProcessId) { return std::make_unique<GatherProbe>(cfg); }, *adv);
    Trace t;
    try {
      t = sim.run();
    } catch (const NonTermination&) {
      ++out.stalls;
      continue;
    }
    ++out.runs;
    std::vector<Gather::Record> records;
    ProcessSet correct;
    for (std::uint32_t p = 0; p < n; ++p) records.push_back(sim.process_as<GatherProbe>(ProcessId{p}).gather().record());
    for (auto p : t.correct()) correct.insert(p);
    auto check = compute_common_core(cfg, records, correct);
    if (!check.large_enough)
      out.fail(cfg.master_seed, adv->name(), "core smaller than n-f: " + check.core.to_string());
    if (!check.contained) out.fail(cfg.master_seed, adv->name(), "core not in every output");
    for (auto p : correct.members()) {
      const auto& rec = records[p.value];
      if (!rec.output || rec.output->size() < n - cfg.f) out.fail(cfg.master_seed, adv->name(), "short output");
      else if (!check.core.subset_of(*rec.output)) out.fail(cfg.master_seed, adv->name(), "bound core escaped");
    }
  }
  return out;
}


// ---- BAA -------------------------------------------------------------------

class BaaProbe : public Process {
 public:
  BaaProbe(const SystemConfig& cfg, WeightVector input, std::size_t rounds)
      : input_(std::move(input)), baa_(cfg, Tag{0, Module::baa, 0, 0}, rounds) {
    baa_.on_done = [](Context& ctx, const WeightVector&) { ctx.output(1); };
  }
  void start(Context& ctx) override { baa_.start(ctx, input_); }
  void receive(Context& ctx, const Envelope& env) override { baa_.handle(ctx, env); }
  const Baa& baa() const { return baa_; }

 private:
  WeightVector input_;
  Baa baa_;
};

// Per coordinate: all zero, all one, random bits, or random 8-bit dyadics.
inline std::vector<WeightVector> baa_inputs(std::size_t n, std::uint64_t seed) {
  std::vector<WeightVector> in(n, WeightVector(n));
  for (std::size_t c = 0; c < n; ++c) {
    Rng kind(derive_seed(seed, c));
    const auto k = kind.below(4);
    for (std::size_t p = 0; p < n; ++p) {
      Rng v(derive_seed(seed, c, p + 1));
      switch (k) {
        case 0: in[p][c] = Dyadic::zero(); break;
        case 1: in[p][c] = Dyadic::one(); break;
        case 2: in[p][c] = v.below(2) ? Dyadic::one() : Dyadic::zero(); break;
        default: in[p][c] = Dyadic::make(v.below(257), 8); break;
      }
    }
  }
  return in;
}

inline SuiteResult baa_suite(std::size_t n, std::size_t runs, std::uint64_t seed, std::size_t rounds = 4) {
  SuiteResult out;
  for (std::uint64_t r = 0; r < runs; ++r) {
    SystemConfig cfg{n, (n - 1) / 3, 32, derive_seed(seed, r)};
    auto adv = make_adversary(adversary_for(r));
    auto inputs = baa_inputs(n, cfg.master_seed);
    Simulation sim(cfg, [cfg, inputs, rounds](ProcessId p) {
      return std::make_unique<BaaProbe>(cfg, inputs[p.value], rounds);
    }, *adv);
    Trace t;
    try {
      t = sim.run();
    } catch (const NonTermination&) {
      ++out.stalls;
      continue;
    }
    ++out.runs;
    auto correct = t.correct();
    // Processes that were correct when inputs were sent; the adaptive
    // adversary corrupts only later.
    std::vector<ProcessId> honest_inputs = correct;
    if (adv->name() == "adaptive") honest_inputs = cfg.processes();
    for (std::size_t c = 0; c < n; ++c) {
      Rational lo(2), hi(-1);
      for (auto p : honest_inputs) {
        Rational x = inputs[p.value][c].to_rational();
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      for (std::size_t round = 0; round <= rounds; ++round) {
        Rational rlo(2), rhi(-1);
        for (auto p : correct) {
          const auto& h = sim.process_as<BaaProbe>(p).baa().history();
          if (h.size() <= round) {
            out.fail(cfg.master_seed, adv->name(), "missing round history");
            continue;
          }
          Rational x = h[round][c].to_rational();
          rlo = std::min(rlo, x);
          rhi = std::max(rhi, x);
          if (x < lo || x > hi) out.fail(cfg.master_seed, adv->name(), "validity: coordinate " + std::to_string(c));
          if (hi == 0 && x != 0) out.fail(cfg.master_seed, adv->name(), "zero not preserved: " + std::to_string(c));
        }
        if (rhi - rlo > (hi - lo) / Rational(BigInt(1) << round))
          out.fail(cfg.master_seed, adv->name(),
                   "contraction: coordinate " + std::to_string(c) + " round " + std::to_string(round));
      }
    }
  }
  return out;
}


// ---- BBA -------------------------------------------------------------------

struct BbaSuiteResult : SuiteResult {
  double mean_rounds = 0;
  std::size_t max_round = 0;
  std::size_t late_unanimous = 0;  // unanimous-input runs that needed more than one round
  std::size_t coin_runs = 0;       // runs where some correct process consulted a coin
};

enum class BbaInputs { mixed, all_zero, all_one };

inline BbaSuiteResult bba_suite(std::size_t n, std::size_t runs, std::uint64_t seed, BbaOptions opts,
                                BbaInputs mode = BbaInputs::mixed, bool adversarial = true) {
  BbaSuiteResult out;
  double rounds = 0;
  for (std::uint64_t r = 0; r < runs; ++r) {
    SystemConfig cfg{n, (n - 1) / 3, 32, derive_seed(seed, r)};
    auto adv = make_adversary(adversarial ? adversary_for(r) : std::string("reorder"));
    std::vector<int> inputs(n);
    Rng in(derive_seed(cfg.master_seed, 0x1A));
    for (auto& b : inputs) b = mode == BbaInputs::mixed ? static_cast<int>(in.below(2)) : mode == BbaInputs::all_one;
    Simulation sim(cfg, [cfg, inputs, opts](ProcessId p) {
      return std::make_unique<BbaProcess>(cfg, inputs[p.value], opts);
    }, *adv);
    Trace t;
    try {
      t = sim.run();
    } catch (const NonTermination&) {
      ++out.stalls;
      continue;
    }
    ++out.runs;
    std::optional<int> agreed;
    bool zero = false, one = false;
    std::uint32_t latest = 0;
    bool used_coin = false;
    for (auto p : t.correct()) {
      (inputs[p.value] ? one : zero) = true;
      const auto& proc = sim.process_as<BbaProcess>(p);
      used_coin |= !proc.coin_values().empty();
      auto d = proc.decision();
      if (!d) {
        out.fail(cfg.master_seed, adv->name(), "no decision");
        continue;
      }
      if (agreed && *agreed != *d) out.fail(cfg.master_seed, adv->name(), "agreement");
      agreed = d;
      latest = std::max(latest, proc.decided_round());
    }
    if (agreed && ((*agreed == 1 && !one) || (*agreed == 0 && !zero)))
      out.fail(cfg.master_seed, adv->name(), "validity");
    if (zero != one && latest > 1) ++out.late_unanimous;
    out.coin_runs += used_coin;
    rounds += latest;
    out.max_round = std::max<std::size_t>(out.max_round, latest);
  }
  if (out.runs) out.mean_rounds = rounds / static_cast<double>(out.runs);
  return out;
}

}  // namespace coinlab::props
