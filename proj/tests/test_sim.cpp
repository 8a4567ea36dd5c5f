#include <gtest/gtest.h>

#include "coinlab/coinlab.hpp"

using namespace coinlab;

namespace {

// p0 pings p1, p1 answers; both output on completion.
class PingPong : public Process {
 public:
  void start(Context& ctx) override {
    if (ctx.self().value == 0) ctx.send(ProcessId{1}, Tag{0, Module::test, 0, 0}, Bytes{'p'});
  }
  void receive(Context& ctx, const Envelope& env) override {
    if (ctx.self().value == 1) ctx.send(env.src, Tag{0, Module::test, 1, 0}, Bytes{'q'});
    ctx.output(1);
  }
};

class Blob : public Process {
 public:
  void start(Context& ctx) override {
    if (ctx.self().value != 0) return;
    ctx.send(ProcessId{1}, Tag{0, Module::test, 3, 0}, Bytes(100, 0xAB));
    ctx.output(0);
  }
  void receive(Context& ctx, const Envelope&) override { ctx.output(1); }
};

// p0 sends one "late" message to p1 and keeps a chain going with p1.
class Chain : public Process {
 public:
  void start(Context& ctx) override {
    if (ctx.self().value != 0) return;
    ctx.send(ProcessId{1}, Tag{0, Module::test, 9, 0}, Bytes{1});
    ctx.send(ProcessId{1}, Tag{0, Module::test, 0, 0}, Bytes{0});
    ctx.output(0);
  }
  void receive(Context& ctx, const Envelope& env) override {
    if (env.tag.lane == 9) {
      ctx.output(1);
      return;
    }
    ctx.send(env.src, Tag{0, Module::test, 0, 0}, Bytes{0});
  }
};

class AvoidLate : public Adversary {
 public:
  std::string name() const override { return "avoid-late"; }
  Decision choose(const AdversaryView& view) override {
    for (std::size_t i = 0; i < view.pending_count(); ++i)
      if (view.meta(i).tag.lane != 9) return Decision{i, std::nullopt};
    return Decision{0, std::nullopt};
  }
};

class Broadcaster : public Process {
 public:
  void start(Context& ctx) override {
    for (int k = 0; k < 3; ++k) ctx.send_all(Tag{0, Module::test, 0, static_cast<std::uint32_t>(k)}, Bytes{1});
  }
  void receive(Context& ctx, const Envelope& env) override {
    order.push_back(env.seq);
    if (++seen == 3 * 4) ctx.output(1);
  }
  std::vector<std::uint64_t> order;
  int seen = 0;
};

class Idle : public Process {
 public:
  void start(Context& ctx) override { ctx.output(0); }
  void receive(Context&, const Envelope&) override {}
};

class GreedyCorrupter : public Adversary {
 public:
  std::string name() const override { return "greedy"; }
  std::vector<ProcessId> initial_corruptions() override { return {ProcessId{0}, ProcessId{1}}; }
  Decision choose(const AdversaryView&) override { return Decision{0, std::nullopt}; }
};

}  // namespace

TEST(Simulation, PingPongHasTwoDeliveries) {
  SystemConfig cfg{2, 0, 32, 1};
  auto adv = make_adversary("fifo");
  RunOptions o;
  o.keep_events = true;
  auto t = run_simulation(cfg, [](ProcessId) { return std::make_unique<PingPong>(); }, *adv, o);
  std::size_t deliveries = 0;
  for (const auto& e : t.events) deliveries += e.kind == EventKind::deliver;
  EXPECT_EQ(deliveries, 2u);
}

TEST(Simulation, SameSeedSameHash) {
  SystemConfig cfg{4, 1, 32, 99};
  ApproxParams p = approx_params(100, Rational(1, 10), 1);
  auto factory = [&](ProcessId) { return std::make_unique<CoinProcess<ApproxCoin>>(std::make_unique<ApproxCoin>(cfg, 0, p)); };
  auto a1 = make_adversary("equivocate");
  auto a2 = make_adversary("equivocate");
  auto t1 = run_simulation(cfg, factory, *a1);
  auto t2 = run_simulation(cfg, factory, *a2);
  EXPECT_EQ(t1.hash, t2.hash);
  EXPECT_FALSE(t1.hash.empty());
  cfg.master_seed = 100;
  auto a3 = make_adversary("equivocate");
  EXPECT_NE(run_simulation(cfg, factory, *a3).hash, t1.hash);
}

TEST(Simulation, AgingRuleForcesDelivery) {
  SystemConfig cfg{2, 0, 32, 3};
  AvoidLate adv;
  auto t = run_simulation(cfg, [](ProcessId) { return std::make_unique<Chain>(); }, adv);
  ASSERT_TRUE(t.outputs[1].has_value());
  EXPECT_EQ(*t.outputs[1], 1);
  EXPECT_LE(t.max_correct_skip, 64u * 2 * 2);
  EXPECT_GE(t.output_step[1], 64u * 2 * 2);
}

TEST(Simulation, FifoDeliversInEnqueueOrder) {
  SystemConfig cfg{4, 1, 32, 3};
  auto adv = make_adversary("fifo");
  Simulation sim(cfg, [](ProcessId) { return std::make_unique<Broadcaster>(); }, *adv);
  sim.run();
  for (std::uint32_t p = 0; p < 4; ++p) {
    const auto& order = sim.process_as<Broadcaster>(ProcessId{p}).order;
    EXPECT_TRUE(std::is_sorted(order.begin(), order.end()));
  }
}

TEST(Simulation, CrashedProcessStaysSilent) {
  SystemConfig cfg{4, 1, 32, 5};
  auto adv = make_adversary("crash-f");
  RunOptions o;
  o.keep_events = true;
  ApproxParams p = approx_params(100, Rational(1, 10), 1);
  auto t = run_simulation(cfg, [&](ProcessId) {
    return std::make_unique<CoinProcess<ApproxCoin>>(std::make_unique<ApproxCoin>(cfg, 0, p));
  }, *adv, o);
  ASSERT_EQ(t.corrupted.size(), 1u);
  ProcessId crashed = t.corrupted.members()[0];
  for (const auto& e : t.events)
    if (e.kind == EventKind::send) EXPECT_NE(e.src, crashed);
}

TEST(Simulation, CountersForOneEnvelope) {
  SystemConfig cfg{2, 0, 32, 1};
  auto adv = make_adversary("fifo");
  RunOptions o;
  o.keep_events = true;
  auto t = run_simulation(cfg, [](ProcessId) { return std::make_unique<Blob>(); }, *adv, o);
  auto m = trace_metrics(t);
  EXPECT_EQ(m.per_tag["test/3"].bits, 800u);
  EXPECT_EQ(m.per_tag["test/3"].messages, 1u);
  EXPECT_EQ(t.total_bits(), 800u);
  EXPECT_TRUE(trace_metrics(Trace{}).per_tag.empty());
}

TEST(Simulation, ExtraCorruptionRejected) {
  SystemConfig cfg{4, 1, 32, 1};
  GreedyCorrupter adv;
  auto t = run_simulation(cfg, [](ProcessId) { return std::make_unique<Idle>(); }, adv);
  EXPECT_EQ(t.corrupted.size(), 1u);
  EXPECT_EQ(t.rejected_corruptions, 1u);
}

TEST(Simulation, StuckProtocolReportsTag) {
  SystemConfig cfg{4, 1, 32, 1};
  auto adv = make_adversary("fifo");
  // Nobody outputs: the pool drains and the run is reported as stuck.
  class Mute : public Process {
   public:
    void start(Context& ctx) override { ctx.send_all(Tag{0, Module::test, 4, 0}, Bytes{1}); }
    void receive(Context&, const Envelope&) override {}
  };
  try {
    run_simulation(cfg, [](ProcessId) { return std::make_unique<Mute>(); }, *adv);
    FAIL() << "expected non-termination";
  } catch (const NonTermination& e) {
    EXPECT_NE(std::string(e.what()).find("non-termination"), std::string::npos);
  }
  class Loop : public Process {
   public:
    void start(Context& ctx) override { ctx.send(ctx.self(), Tag{0, Module::test, 5, 0}, Bytes{1}); }
    void receive(Context& ctx, const Envelope& env) override { ctx.send(ctx.self(), env.tag, Bytes{1}); }
  };
  RunOptions o;
  o.step_budget = 1000;
  try {
    run_simulation(cfg, [](ProcessId) { return std::make_unique<Loop>(); }, *adv, o);
    FAIL() << "expected non-termination";
  } catch (const NonTermination& e) {
    EXPECT_NE(std::string(e.what()).find("0.test.5.0"), std::string::npos) << e.what();
  }
}

TEST(Simulation, AdversaryCannotReadCorrectTraffic) {
  class Peek : public Adversary {
   public:
    std::string name() const override { return "peek"; }
    Decision choose(const AdversaryView& view) override {
      for (std::size_t i = 0; i < view.pending_count(); ++i) leaked |= view.payload(i).has_value();
      return Decision{0, std::nullopt};
    }
    bool leaked = false;
  } adv;
  SystemConfig cfg{4, 1, 32, 2};
  run_simulation(cfg, [](ProcessId) { return std::make_unique<Broadcaster>(); }, adv);
  EXPECT_FALSE(adv.leaked);
}
