#include <gtest/gtest.h>

#include "support/properties.hpp"

using namespace coinlab;
using namespace coinlab::props;

namespace {

void expect_clean(const SuiteResult& r) {
  EXPECT_EQ(r.stalls, 0u);
  EXPECT_EQ(r.violations, 0u);
  for (const auto& n : r.notes) ADD_FAILURE() << n;
}

// Only process 1 broadcasts. Outputs on delivery, or at start when told to.
class SingleLeaderBrb : public Process {
 public:
  SingleLeaderBrb(const SystemConfig& cfg, bool output_at_start)
      : brb_(cfg, Tag{0, Module::test, 0, 0}), early_(output_at_start) {
    brb_.on_deliver = [this](Context& ctx, ProcessId, std::uint32_t, const Bytes&) {
      ++delivered;
      ctx.output(1);
    };
  }
  void start(Context& ctx) override {
    if (ctx.self().value == 1) brb_.broadcast(ctx, 0, Bytes{'a', 'b'});
    if (early_) ctx.output(0);
  }
  void receive(Context& ctx, const Envelope& env) override { brb_.handle(ctx, env); }
  int delivered = 0;

 private:
  Brb brb_;
  bool early_;
};

class CrashOne : public Adversary {
 public:
  std::string name() const override { return "crash-1"; }
  std::vector<ProcessId> initial_corruptions() override { return {ProcessId{1}}; }
  Decision choose(const AdversaryView&) override { return Decision{0, std::nullopt}; }
};

}  // namespace

TEST(Brb, Thresholds) {
  auto t = brb_thresholds(4, 1);
  EXPECT_EQ(t.echo_to_ready, 3u);
  EXPECT_EQ(t.ready_amplify, 2u);
  EXPECT_EQ(t.deliver, 3u);
}

TEST(Brb, CorrectLeaderThreeMessageDelays) {
  SystemConfig cfg{4, 1, 32, 1};
  auto adv = make_adversary("fifo");
  auto t = run_simulation(cfg, [cfg](ProcessId) { return std::make_unique<SingleLeaderBrb>(cfg, false); }, *adv);
  // SEND, ECHO, READY: each delivery sits at causal depth 3.
  for (std::uint32_t p = 0; p < 4; ++p) {
    EXPECT_EQ(t.outputs[p], 1);
    EXPECT_EQ(t.output_depth[p], 3u);
  }
}

TEST(Brb, ValidityAllDeliver) {
  SystemConfig cfg{4, 1, 32, 1};
  auto adv = make_adversary("reorder");
  Simulation sim(cfg, [cfg](ProcessId) { return std::make_unique<BrbProbe>(cfg); }, *adv, drained());
  sim.run();
  for (std::uint32_t p = 0; p < 4; ++p) {
    const auto& d = sim.process_as<BrbProbe>(ProcessId{p}).delivered;
    ASSERT_EQ(d.size(), 4u);
    for (std::uint32_t l = 0; l < 4; ++l) EXPECT_EQ(d.at(ProcessId{l}), sim.process_as<BrbProbe>(ProcessId{l}).sent);
  }
}

TEST(Brb, SilentLeaderDeliversNothing) {
  SystemConfig cfg{4, 1, 32, 1};
  CrashOne adv;
  Simulation sim(cfg, [cfg](ProcessId) { return std::make_unique<SingleLeaderBrb>(cfg, true); }, adv, drained());
  sim.run();
  for (std::uint32_t p : {0u, 2u, 3u}) EXPECT_EQ(sim.process_as<SingleLeaderBrb>(ProcessId{p}).delivered, 0);
}

TEST(Brb, PropertySuite) {
  expect_clean(brb_suite(4, 200, 1));
  expect_clean(brb_suite(7, 100, 2));
}

TEST(Avss, PropertySuite) {
  expect_clean(avss_suite(4, 200, 3));
  expect_clean(avss_suite(7, 60, 4));
}

TEST(Rsd, PropertySuite) {
  expect_clean(rsd_suite(4, 200, 5));
  expect_clean(rsd_suite(7, 60, 6));
}

TEST(Gather, PropertySuite) {
  expect_clean(gather_suite(4, 200, 7));
  expect_clean(gather_suite(7, 100, 8));
}

TEST(Baa, PropertySuite) {
  expect_clean(baa_suite(4, 100, 9));
  expect_clean(baa_suite(7, 30, 10));
}

TEST(Avss, RetrieveTwiceGivesSameValue) {
  SystemConfig cfg{4, 1, 32, 11};
  for (auto backend : {AvssBackend::ideal, AvssBackend::shamir}) {
    auto adv = make_adversary("garble");
    Simulation sim(cfg, [cfg, backend](ProcessId) { return std::make_unique<AvssProbe>(cfg, backend); }, *adv,
                   drained());
    auto t = sim.run();
    for (auto p : t.correct()) {
      const auto& probe = sim.process_as<AvssProbe>(p);
      for (const auto& [dealer, v] : probe.retrieved) EXPECT_EQ(probe.avss().result(dealer, 0, 0), v);
    }
  }
}

TEST(Rsd, NoFaultReplay) {
  SystemConfig cfg{4, 1, 32, 12};
  auto adv = make_adversary("fifo");
  Simulation sim(cfg, [cfg](ProcessId) { return std::make_unique<RsdProbe>(cfg, AvssBackend::ideal); }, *adv,
                 drained());
  sim.run();
  // Every process dealt 4 values, one per target.
  for (std::uint32_t p = 0; p < 4; ++p) EXPECT_EQ(sim.process_as<RsdProbe>(ProcessId{p}).rsd().dealt().size(), 4u);
  const auto& probe = sim.process_as<RsdProbe>(ProcessId{0});
  auto sources = probe.rsd().announced(ProcessId{2});
  ASSERT_TRUE(sources.has_value());
  EXPECT_EQ(sources->size(), 3u);
  std::uint64_t sum = 0;
  for (auto k : sources->members()) sum += sim.process_as<RsdProbe>(k).rsd().dealt()[2];
  ASSERT_TRUE(probe.values.count(ProcessId{2}));
  EXPECT_EQ(probe.values.at(ProcessId{2}), sum % 10);
}

TEST(Gather, AcceptAllNoFaultsGivesFullSet) {
  SystemConfig cfg{4, 1, 32, 13};
  auto adv = make_adversary("fifo");
  class AllGather : public Process {
   public:
    explicit AllGather(const SystemConfig& cfg) : g_(cfg, Tag{0, Module::gather, 0, 0}, [](ProcessId) { return true; }) {
      g_.on_output = [](Context& ctx, ProcessSet s) { ctx.output(static_cast<std::int64_t>(s.size())); };
    }
    void start(Context& ctx) override { g_.start(ctx); }
    void receive(Context& ctx, const Envelope& env) override { g_.handle(ctx, env); }
    Gather g_;
  };
  auto t = run_simulation(cfg, [cfg](ProcessId) { return std::make_unique<AllGather>(cfg); }, *adv);
  for (auto o : t.outputs) EXPECT_EQ(o, 4);
}

TEST(Baa, ValidityAndZeroPreservation) {
  SystemConfig cfg{4, 1, 32, 14};
  auto adv = make_adversary("crash-f");
  WeightVector in(4);
  in[0] = Dyadic::make(3, 3);
  in[1] = Dyadic::zero();
  in[2] = Dyadic::one();
  in[3] = Dyadic::zero();
  std::vector<WeightVector> inputs(4, in);
  for (std::uint32_t p = 0; p < 4; ++p) inputs[p][2] = p == 3 ? Dyadic::zero() : Dyadic::one();
  Simulation sim(cfg, [cfg, inputs](ProcessId p) { return std::make_unique<BaaProbe>(cfg, inputs[p.value], 3); }, *adv);
  auto t = sim.run();
  for (auto p : t.correct()) {
    const auto& out = sim.process_as<BaaProbe>(p).baa().output();
    EXPECT_EQ(out[0], Dyadic::make(3, 3));
    EXPECT_TRUE(out[1].is_zero());
    EXPECT_TRUE(out[3].is_zero());
  }
}

TEST(Baa, EncodeDecodeRoundTrip) {
  WeightVector v{Dyadic::zero(), Dyadic::one(), Dyadic::make(5, 7)};
  auto back = Baa::decode(Baa::encode(v), 3);
  ASSERT_TRUE(back);
  EXPECT_EQ(*back, v);
  EXPECT_FALSE(Baa::decode(Bytes{1, 2}, 3));
}
