#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <regex>
#include <string>

#include "coinlab/coinlab.hpp"
#include "coinlab/experiments/bench.hpp"
#include "coinlab/experiments/coins.hpp"
#include "coinlab/experiments/fig2.hpp"

namespace {

using namespace coinlab;

constexpr int kOk = 0, kViolation = 1, kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv("COINLAB_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError("COINLAB_SEED must be an unsigned integer");
    }
  }
  return 1;
}

std::size_t resolve_f(std::size_t n, std::optional<std::size_t> f) {
  return f ? *f : (n - 1) / 3;
}

std::pair<unsigned, unsigned> parse_range(const std::string& text) {
  static const std::regex re(R"((\d+)(?:\.\.(\d+))?)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw UsageError("rounds must look like A..B or A");
  unsigned a = static_cast<unsigned>(std::stoul(m[1]));
  unsigned b = m[2].matched ? static_cast<unsigned>(std::stoul(m[2])) : a;
  if (b < a || b > 60) throw UsageError("bad rounds range");
  return {a, b};
}

// ---- coin ------------------------------------------------------------------

struct CoinArgs {
  std::string kind;
  std::size_t n = 4;
  std::optional<std::size_t> f;
  std::uint64_t domain = 8;
  std::string epsilon = "0.05";
  std::string delta = "2/3";
  unsigned lambda = 32;
  std::optional<std::size_t> rounds;
  bool uncalibrated = false;
  std::string backend = "ideal";
  std::uint64_t seed = 0;
  std::uint64_t trials = 100;
  std::string adversary = "reorder";
};

int run_coin_command(const CoinArgs& a) {
  CoinRunConfig c;
  c.kind = parse_coin(a.kind);
  c.n = a.n;
  c.f = resolve_f(a.n, a.f);
  c.domain = a.domain;
  c.epsilon = parse_rational(a.epsilon);
  c.delta = parse_rational(a.delta);
  c.lambda = a.lambda;
  c.rounds = a.rounds;
  c.calibrated = !a.uncalibrated;
  if (a.backend != "ideal" && a.backend != "shamir") throw UsageError("backend must be ideal or shamir");
  c.backend = a.backend == "shamir" ? AvssBackend::shamir : AvssBackend::ideal;
  c.adversary = a.adversary;
  SystemConfig{c.n, c.f, c.lambda, 0}.validate();
  make_adversary(c.adversary);

  auto s = run_coin_trials(c, a.seed, a.trials);
  const std::uint64_t domain = coin_domain(c);
  std::cout << "coin " << coin_name(c.kind) << " n=" << c.n << " f=" << c.f << " domain=" << domain
            << " adversary=" << c.adversary << " trials=" << s.trials << " stalls=" << s.stalls << "\n";
  std::cout << "max_pairwise_distance " << s.max_distance << "\n";
  std::cout << "disagreement_rate " << (s.trials ? double(s.disagreements) / double(s.trials) : 0.0) << "\n";
  std::cout << "mean_bits " << std::fixed << std::setprecision(0) << s.mean_bits << " baa_share "
            << std::setprecision(3) << (s.mean_bits > 0 ? s.mean_baa_bits / s.mean_bits : 0.0) << "\n";
  std::cout.unsetf(std::ios::floatfield);
  if (!s.first_outputs.empty() && domain <= 4096) {
    auto u = chi_square_uniform(s.first_outputs, domain);
    std::cout << "first_output_chi_square " << u.statistic << " p=" << u.p_value << "\n";
  }

  bool ok = s.stalls == 0;
  if (c.kind == CoinKind::approx) {
    Rational bound_r = c.epsilon * Rational(static_cast<long long>(c.domain));
    auto bound = static_cast<std::uint64_t>(boost::multiprecision::numerator(bound_r) /
                                            boost::multiprecision::denominator(bound_r));
    if (Rational(BigInt(bound)) < bound_r) ++bound;
    std::cout << "bound " << bound << (s.max_distance <= bound ? " ok" : " VIOLATED") << "\n";
    ok = ok && s.max_distance <= bound;
  }
  if (c.kind == CoinKind::reduction) {
    std::cout << "unexplained_disagreements " << s.unexplained << " replay_mismatches " << s.replay_mismatches << "\n";
    ok = ok && s.unexplained == 0 && s.replay_mismatches == 0;
  }
  return ok ? kOk : kViolation;
}

// ---- fig2 ------------------------------------------------------------------

struct Fig2Args {
  std::size_t n = 50;
  std::string rounds = "0..12";
  std::uint64_t trials = 100'000;
  std::uint64_t search_trials = 20'000;
  std::uint64_t seed = 0;
  bool uncalibrated = false;
  bool analytic_v = false;
  std::optional<double> v;
  std::string split = "worst";
  std::string out;
};

int run_fig2_command(const Fig2Args& a) {
  Fig2Config cfg;
  cfg.n = a.n;
  std::tie(cfg.r_min, cfg.r_max) = parse_range(a.rounds);
  cfg.trials = a.trials;
  cfg.search_trials = a.search_trials;
  cfg.seed = a.seed;
  cfg.calibrated = !a.uncalibrated;
  cfg.analytic_v = a.analytic_v;
  if (a.v && (*a.v <= 0 || *a.v >= 1)) throw UsageError("v must be in (0, 1)");
  cfg.v_override = a.v;
  if (a.split == "worst") cfg.split = SplitPolicy::worst;
  else if (a.split == "solid") cfg.split = SplitPolicy::solid_only;
  else if (a.split == "marginal") cfg.split = SplitPolicy::marginal_only;
  else throw UsageError("split must be worst, solid or marginal");
  if (cfg.n < 4 || cfg.n > 64) throw UsageError("n must be in [4, 64]");
  if (cfg.trials < 1 || cfg.search_trials < 1) throw UsageError("trials must be positive");

  auto rows = experiment_fig2(cfg);
  if (a.out.empty()) {
    write_fig2_csv(std::cout, rows);
  } else {
    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw UsageError("cannot open " + a.out);
    write_fig2_csv(f, rows);
    std::cout << "wrote " << rows.size() << " rows to " << a.out << "\n";
  }
  bool ok = true;
  for (const auto& r : rows) {
    if (r.theoretical_bound < 1 && r.empirical_failure > r.theoretical_bound + 3 * r.std_error) {
      std::cerr << "r=" << r.r << ": empirical failure above the bound\n";
      ok = false;
    }
  }
  return ok ? kOk : kViolation;
}

// ---- bba -------------------------------------------------------------------

struct BbaArgs {
  std::size_t n = 4;
  std::optional<std::size_t> f;
  std::string inputs;
  std::uint64_t seeds = 10;
  std::uint64_t seed = 0;
  std::string adversary = "reorder";
  std::string coin = "real";
  std::string delta = "3/4";
  std::uint32_t inject_until = 0;
};

int run_bba_command(const BbaArgs& a) {
  SystemConfig base{a.n, resolve_f(a.n, a.f), 32, 0};
  base.validate();
  std::string bits = a.inputs.empty() ? std::string(a.n, '0') : a.inputs;
  if (bits.size() != a.n || bits.find_first_not_of("01") != std::string::npos)
    throw UsageError("inputs must be a bit string of length n");
  BbaOptions opts;
  if (a.coin == "real") opts.coin = CoinMode::real;
  else if (a.coin == "shared") opts.coin = CoinMode::shared;
  else if (a.coin == "local") opts.coin = CoinMode::local;
  else throw UsageError("coin must be real, shared or local");
  opts.delta = parse_rational(a.delta);
  opts.inject_until = a.inject_until;
  make_adversary(a.adversary);

  std::size_t agreement = 0, validity = 0, stalls = 0;
  double rounds = 0;
  std::size_t runs = 0;
  for (std::uint64_t k = 0; k < a.seeds; ++k) {
    SystemConfig cfg = base;
    cfg.master_seed = derive_seed(a.seed, k);
    auto adv = make_adversary(a.adversary);
    Simulation sim(cfg, [&](ProcessId p) {
      return std::make_unique<BbaProcess>(cfg, bits[p.value] - '0', opts);
    }, *adv);
    Trace t;
    try {
      t = sim.run();
    } catch (const NonTermination& e) {
      ++stalls;
      std::cout << "seed " << k << " stalled: " << e.what() << "\n";
      continue;
    }
    ++runs;
    std::optional<int> agreed;
    bool has[2] = {false, false};
    std::uint32_t latest = 0;
    std::string line;
    for (std::uint32_t p = 0; p < a.n; ++p) {
      if (t.corrupted.contains(ProcessId{p})) {
        line += " -";
        continue;
      }
      has[bits[p] - '0'] = true;
      auto& proc = sim.process_as<BbaProcess>(ProcessId{p});
      auto d = proc.decision();
      line += " " + std::to_string(*d) + "@" + std::to_string(proc.decided_round());
      latest = std::max(latest, proc.decided_round());
      if (agreed && *agreed != *d) ++agreement;
      agreed = d;
    }
    if (agreed && !has[*agreed]) ++validity;
    rounds += latest;
    std::cout << "seed " << k << " decisions" << line << "\n";
  }
  std::cout << "runs " << runs << " mean_rounds " << (runs ? rounds / double(runs) : 0.0) << " agreement_violations "
            << agreement << " validity_violations " << validity << " stalls " << stalls << "\n";
  return agreement + validity + stalls == 0 ? kOk : kViolation;
}

// ---- irs -------------------------------------------------------------------

int run_irs_codeword(unsigned n, unsigned m, const std::string& index) {
  if (m > n || n == 0) throw UsageError("need 0 <= m <= n and n >= 1");
  BigInt i;
  try {
    i = BigInt(index);
  } catch (const std::exception&) {
    throw UsageError("index must be a non-negative integer");
  }
  if (i < 0 || i >= binomial(n, m)) throw UsageError("index out of range");
  std::cout << codeword(n, m, i) << "\n";
  return kOk;
}

int run_irs_check(unsigned max_n) {
  if (max_n < 1 || max_n > 20) throw UsageError("max-n must be in [1, 20]");
  std::size_t failures = 0, codes = 0;
  for (unsigned n = 1; n <= max_n; ++n)
    for (unsigned m = 0; m <= n; ++m) {
      auto list = enumerate_code(n, m);
      auto c = check_code(n, m, list);
      ++codes;
      bool round_trip = true;
      for (std::size_t i = 0; i < list.size(); ++i)
        if (rank(list[i], m) != BigInt(i)) round_trip = false;
      if (!c.ok() || !round_trip) {
        ++failures;
        std::cout << "C(" << n << "," << m << ") failed: bijection=" << c.bijection << " weights=" << c.weights
                  << " adjacent=" << c.adjacent << " cyclic=" << c.cyclic << " rank=" << round_trip << "\n";
      }
    }
  std::cout << "checked " << codes << " codes, " << failures << " failures\n";
  return failures ? kViolation : kOk;
}

// ---- bench -----------------------------------------------------------------

int run_bench(std::size_t small, std::size_t large, std::uint64_t seed, std::uint64_t trials) {
  std::vector<BenchRow> rows;
  auto growth = bench_growth(small, large, seed, trials, &rows);
  std::cout << "coin,n,bits,baa_bits,messages\n";
  for (const auto& r : rows)
    std::cout << coin_name(r.kind) << ',' << r.n << ',' << std::fixed << std::setprecision(0) << r.bits << ','
              << r.baa_bits << ',' << r.messages << '\n';
  std::cout.unsetf(std::ios::floatfield);
  for (const auto& g : growth)
    std::cout << coin_name(g.kind) << " growth " << std::setprecision(3) << g.factor << " baa_share " << g.baa_share
              << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coinlab: asynchronous common coins in a deterministic simulator"};
  app.require_subcommand(1);

  std::uint64_t seed_default = 1;
  try {
    seed_default = default_seed();
  } catch (const UsageError& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  }

  CoinArgs coin;
  coin.seed = seed_default;
  auto* coin_cmd = app.add_subcommand("coin", "full simulator runs of one coin");
  coin_cmd->add_option("kind", coin.kind, "approx | mc-reduction | mc-direct | cr93")
      ->required()
      ->check(CLI::IsMember({"approx", "mc-reduction", "mc-direct", "cr93"}));
  coin_cmd->add_option("--n", coin.n, "processes");
  coin_cmd->add_option("--f", coin.f, "fault bound (default (n-1)/3)");
  coin_cmd->add_option("--domain", coin.domain, "output domain size");
  coin_cmd->add_option("--epsilon", coin.epsilon, "approximate coin precision");
  coin_cmd->add_option("--delta", coin.delta, "Monte Carlo success target");
  coin_cmd->add_option("--lambda", coin.lambda, "ticket bits");
  coin_cmd->add_option("--rounds", coin.rounds, "direct coin: agreement rounds override");
  coin_cmd->add_flag("--uncalibrated", coin.uncalibrated, "direct coin without calibration");
  coin_cmd->add_option("--backend", coin.backend, "ideal | shamir");
  coin_cmd->add_option("--seed", coin.seed, "master seed (default $COINLAB_SEED or 1)");
  coin_cmd->add_option("--trials", coin.trials, "independent runs");
  coin_cmd->add_option("--adversary", coin.adversary, "fifo, reorder, delay, crash-f, equivocate, garble, adaptive");

  Fig2Args fig2;
  fig2.seed = seed_default;
  auto* fig2_cmd = app.add_subcommand("fig2", "offline failure-probability curve, CSV output");
  fig2_cmd->add_option("--n", fig2.n, "processes");
  fig2_cmd->add_option("--rounds", fig2.rounds, "range A..B of agreement rounds");
  fig2_cmd->add_option("--trials", fig2.trials, "trials per point");
  fig2_cmd->add_option("--search-trials", fig2.search_trials, "trials per candidate v while searching");
  fig2_cmd->add_option("--seed", fig2.seed, "seed (default $COINLAB_SEED or 1)");
  fig2_cmd->add_flag("--uncalibrated", fig2.uncalibrated, "identity weights");
  fig2_cmd->add_flag("--analytic-v", fig2.analytic_v, "use the closed-form v instead of searching");
  fig2_cmd->add_option("--v", fig2.v, "fixed calibration point");
  fig2_cmd->add_option("--split", fig2.split, "worst | solid | marginal");
  fig2_cmd->add_option("--out", fig2.out, "CSV file (default stdout)");

  BbaArgs bba;
  bba.seed = seed_default;
  auto* bba_cmd = app.add_subcommand("bba", "binary agreement driven by the coin");
  bba_cmd->add_option("--n", bba.n, "processes");
  bba_cmd->add_option("--f", bba.f, "fault bound");
  bba_cmd->add_option("--inputs", bba.inputs, "input bits, one per process");
  bba_cmd->add_option("--seeds", bba.seeds, "number of runs");
  bba_cmd->add_option("--seed", bba.seed, "base seed");
  bba_cmd->add_option("--adversary", bba.adversary, "adversary name");
  bba_cmd->add_option("--coin", bba.coin, "real | shared | local");
  bba_cmd->add_option("--delta", bba.delta, "per-round coin success target");
  bba_cmd->add_option("--inject-until", bba.inject_until, "flip each process's coin at random up to this round");

  auto* irs_cmd = app.add_subcommand("irs", "constant-weight cyclic Gray code");
  irs_cmd->require_subcommand(1);
  unsigned code_n = 5, code_m = 2, max_n = 12;
  std::string index = "0";
  auto* cw_cmd = irs_cmd->add_subcommand("codeword", "print the word at an index");
  cw_cmd->add_option("--n", code_n, "word length")->required();
  cw_cmd->add_option("--m", code_m, "weight")->required();
  cw_cmd->add_option("--index", index, "position in the code")->required();
  auto* check_cmd = irs_cmd->add_subcommand("check", "exhaustive code check");
  check_cmd->add_option("--max-n", max_n, "largest word length");

  std::size_t bench_small = 4, bench_large = 8;
  std::uint64_t bench_trials = 5, bench_seed = seed_default;
  auto* bench_cmd = app.add_subcommand("bench", "bit and message counters versus n");
  bench_cmd->add_option("--n-small", bench_small, "smaller system");
  bench_cmd->add_option("--n-large", bench_large, "larger system");
  bench_cmd->add_option("--trials", bench_trials, "runs per point");
  bench_cmd->add_option("--seed", bench_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*coin_cmd) return run_coin_command(coin);
    if (*fig2_cmd) return run_fig2_command(fig2);
    if (*bba_cmd) return run_bba_command(bba);
    if (*cw_cmd) return run_irs_codeword(code_n, code_m, index);
    if (*check_cmd) return run_irs_check(max_n);
    if (*bench_cmd) return run_bench(bench_small, bench_large, bench_seed, bench_trials);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kViolation;
  }
  return kUsage;
}
