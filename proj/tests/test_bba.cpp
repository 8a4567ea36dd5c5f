#include <gtest/gtest.h>

#include "support/properties.hpp"

using namespace coinlab;
using namespace coinlab::props;

TEST(Bba, AllZeroDecidesInRoundOne) {
  SystemConfig cfg{4, 1, 32, 1};
  auto adv = make_adversary("fifo");
  Simulation sim(cfg, [cfg](ProcessId) { return std::make_unique<BbaProcess>(cfg, 0, BbaOptions{}); }, *adv);
  auto t = sim.run();
  for (std::uint32_t p = 0; p < 4; ++p) {
    EXPECT_EQ(t.outputs[p], 0);
    EXPECT_EQ(sim.process_as<BbaProcess>(ProcessId{p}).decided_round(), 1u);
  }
}

TEST(Bba, UnanimousInputsUnderAdversaries) {
  auto r = bba_suite(4, 100, 2, BbaOptions{}, BbaInputs::all_one);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_EQ(r.stalls, 0u);
  EXPECT_EQ(r.late_unanimous, 0u);
}

TEST(Bba, SafetyWithInjectedCoinDisagreement) {
  BbaOptions opts;
  opts.inject_until = 3;
  auto r = bba_suite(4, 200, 3, opts);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_EQ(r.stalls, 0u);
  for (const auto& n : r.notes) ADD_FAILURE() << n;
}

TEST(Bba, SafetyWithLocalCoins) {
  BbaOptions opts;
  opts.coin = CoinMode::local;
  auto r = bba_suite(4, 200, 4, opts);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_EQ(r.stalls, 0u);
}

TEST(Bba, SevenProcesses) {
  BbaOptions opts;
  opts.inject_until = 2;
  auto r = bba_suite(7, 40, 5, opts);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_EQ(r.stalls, 0u);
}

TEST(Bba, MeanRoundsNoFaults) {
  auto r = bba_suite(4, 200, 6, BbaOptions{}, BbaInputs::mixed, false);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_LE(r.mean_rounds, 6.0);
}
