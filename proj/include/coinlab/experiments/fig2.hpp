#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coinlab/coins/formulas.hpp"
#include "coinlab/core/rng.hpp"

namespace coinlab {

// How a coordinate's weight may vary across correct processes, seen from
// the first process to finish approximate agreement.
enum class CoordMode {
  core,      // every correct process had it: weight 1 everywhere
  solid,     // first weight 1, others anywhere in [1-eps, 1]
  marginal,  // first weight eps, others in [0, 2eps]; 0 means dropped
};

struct WeightBox {
  double first, low, high;
};

inline WeightBox weight_box(CoordMode m, double eps) {
  switch (m) {
    case CoordMode::core: return {1.0, 1.0, 1.0};
    case CoordMode::solid: return {1.0, std::max(1.0 - eps, eps), 1.0};
    case CoordMode::marginal: return {std::min(eps, 1.0), 0.0, std::min(2 * eps, 1.0)};
  }
  return {1.0, 1.0, 1.0};
}

// Calibration applied to a weight; v == nullopt means identity.
inline double apply_calibration(double w, double eps, std::optional<double> v) {
  if (!v || eps >= 1) return w;
  return calibrate(w, eps, *v);
}

inline void check_modes(const std::vector<CoordMode>& modes, std::size_t f) {
  std::size_t marginal = 0;
  for (auto m : modes) marginal += m == CoordMode::marginal;
  if (marginal > f) throw std::invalid_argument("more than f marginal coordinates");
}

// The adversary wins when the leader of the first process's calibrated
// tickets can be matched by another coordinate at its largest weight while
// the leader sits at its smallest weight.
inline bool offline_adversary_wins(const std::vector<double>& tickets, const std::vector<CoordMode>& modes,
                                   double eps, std::optional<double> v, std::size_t f) {
  if (tickets.size() != modes.size() || tickets.size() < 2) throw std::invalid_argument("bad ticket vector");
  check_modes(modes, f);
  const std::size_t n = tickets.size();
  std::size_t leader = 0;
  double best = -1;
  for (std::size_t i = 0; i < n; ++i) {
    double x = apply_calibration(weight_box(modes[i], eps).first, eps, v) * tickets[i];
    if (x > best) {
      best = x;
      leader = i;
    }
  }
  const double leader_min = apply_calibration(weight_box(modes[leader], eps).low, eps, v) * tickets[leader];
  for (std::size_t i = 0; i < n; ++i) {
    if (i == leader) continue;
    if (apply_calibration(weight_box(modes[i], eps).high, eps, v) * tickets[i] >= leader_min) return true;
  }
  return false;
}

// Independent check: enumerate views on a grid of each coordinate's weight
// range (endpoints included) and look for one whose argmax is not the
// first process's leader.
inline bool brute_force_wins(const std::vector<double>& tickets, const std::vector<CoordMode>& modes, double eps,
                             std::optional<double> v, std::size_t grid = 6) {
  const std::size_t n = tickets.size();
  std::vector<std::vector<double>> choices(n);
  std::size_t leader = 0;
  double best = -1;
  for (std::size_t i = 0; i < n; ++i) {
    auto box = weight_box(modes[i], eps);
    for (std::size_t g = 0; g < grid; ++g)
      choices[i].push_back(box.low + (box.high - box.low) * static_cast<double>(g) / static_cast<double>(grid - 1));
    double x = apply_calibration(box.first, eps, v) * tickets[i];
    if (x > best) {
      best = x;
      leader = i;
    }
  }
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    double lead = apply_calibration(choices[leader][idx[leader]], eps, v) * tickets[leader];
    for (std::size_t i = 0; i < n; ++i)
      if (i != leader && apply_calibration(choices[i][idx[i]], eps, v) * tickets[i] >= lead) return true;
    std::size_t k = 0;
    while (k < n && ++idx[k] == grid) idx[k++] = 0;
    if (k == n) return false;
  }
}

// Counter-based uniform draws so each trial depends only on (seed, trial).
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum class SplitPolicy {
  worst,          // adversary picks the split between solid and marginal that hurts most
  solid_only,     // all f non-core coordinates solid
  marginal_only,  // all f non-core coordinates marginal
};

// Ticket summaries of one trial: n-f core coordinates followed by f
// adversarial ones; the first s adversarial coordinates are solid and the
// rest marginal.
struct TrialTickets {
  double core_max;
  std::vector<double> prefix1, prefix2;  // top two tickets among the first s adversarial coordinates
  std::vector<double> suffix1;           // top ticket among adversarial coordinates s..f-1
};

class TicketSampler {
 public:
  TicketSampler(std::size_t n, std::size_t f, std::uint64_t seed, std::uint64_t stream)
      : n_(n), f_(f), seed_(derive_seed(seed, stream)) {}

  TrialTickets draw(std::uint64_t trial, std::uint64_t round) const {
    std::uint64_t state = seed_ ^ (round * 0xD1B54A32D192ED03ULL) ^ (trial * 0xA24BAED4963EE407ULL);
    splitmix64(state);
    auto unit = [&] { return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53; };
    TrialTickets t;
    t.core_max = 0;
    for (std::size_t i = 0; i < n_ - f_; ++i) t.core_max = std::max(t.core_max, unit());
    std::vector<double> adv(f_);
    for (auto& x : adv) x = unit();
    t.prefix1.assign(f_ + 1, -1);
    t.prefix2.assign(f_ + 1, -1);
    for (std::size_t s = 1; s <= f_; ++s) {
      double x = adv[s - 1];
      t.prefix1[s] = std::max(t.prefix1[s - 1], x);
      t.prefix2[s] = x > t.prefix1[s - 1] ? t.prefix1[s - 1] : std::max(t.prefix2[s - 1], x);
    }
    t.suffix1.assign(f_ + 1, -1);
    for (std::size_t s = f_; s-- > 0;) t.suffix1[s] = std::max(t.suffix1[s + 1], adv[s]);
    return t;
  }

 private:
  std::size_t n_, f_;
  std::uint64_t seed_;
};

struct ModelWeights {
  double solid_min;     // calibrated lowest weight of a solid coordinate
  double marginal_first;
  double marginal_max;
};

inline ModelWeights model_weights(double eps, std::optional<double> v) {
  return ModelWeights{apply_calibration(std::max(1.0 - eps, eps), eps, v), apply_calibration(std::min(eps, 1.0), eps, v),
                      apply_calibration(std::min(2 * eps, 1.0), eps, v)};
}

// Same predicate as offline_adversary_wins, evaluated from the summaries.
inline bool wins_with_split(const TrialTickets& t, std::size_t s, const ModelWeights& w) {
  const double core = t.core_max, solid = t.prefix1[s], marg = t.suffix1[s];
  const double marg_first = marg >= 0 ? w.marginal_first * marg : -1;
  if (marg_first > core && marg_first > solid) return true;  // leader can be dropped to weight 0
  if (core >= solid) return marg >= 0 && w.marginal_max * marg >= core;
  const double bar = w.solid_min * solid;
  return core >= bar || t.prefix2[s] >= bar || (marg >= 0 && w.marginal_max * marg >= bar);
}

struct SplitRates {
  std::vector<std::uint64_t> wins;  // per split s = number of solid adversarial coordinates
  std::uint64_t trials = 0;
  double rate(std::size_t s) const { return trials ? static_cast<double>(wins[s]) / static_cast<double>(trials) : 0; }
};

inline std::vector<std::size_t> splits_for(SplitPolicy p, std::size_t f) {
  if (p == SplitPolicy::solid_only) return {f};
  if (p == SplitPolicy::marginal_only) return {0};
  std::vector<std::size_t> all;
  for (std::size_t s = 0; s <= f; ++s) all.push_back(s);
  return all;
}

struct Fig2Config {
  std::size_t n = 50;
  unsigned r_min = 0;
  unsigned r_max = 12;
  std::uint64_t trials = 100'000;
  std::uint64_t search_trials = 20'000;
  bool calibrated = true;
  std::optional<double> v_override;
  bool analytic_v = false;
  SplitPolicy split = SplitPolicy::worst;
  std::uint64_t seed = 1;

  std::size_t f() const { return (n - 1) / 3; }
};

struct Fig2Row {
  unsigned r;
  double empirical_failure;
  double theoretical_bound;
  double ideal;
  double v;
  double std_error;
  std::size_t worst_split;
};

// Calibration is only used for eps <= 1/16; otherwise the identity, which
// is the calibration line with v = eps.
inline bool calibration_active(const Fig2Config& cfg, unsigned r) { return cfg.calibrated && r >= 4; }

inline SplitRates count_wins(const Fig2Config& cfg, unsigned r, std::optional<double> v, std::uint64_t trials,
                             std::uint64_t stream) {
  const std::size_t f = cfg.f();
  const double eps = std::ldexp(1.0, -static_cast<int>(r));
  const auto w = model_weights(eps, v);
  const auto splits = splits_for(cfg.split, f);
  TicketSampler sampler(cfg.n, f, cfg.seed, stream);
  SplitRates out;
  out.wins.assign(f + 1, 0);
  out.trials = trials;
  for (std::uint64_t t = 0; t < trials; ++t) {
    auto tk = sampler.draw(t, r);
    for (auto s : splits) out.wins[s] += wins_with_split(tk, s, w);
  }
  return out;
}

inline std::pair<double, std::size_t> worst_rate(const SplitRates& rates, SplitPolicy p, std::size_t f) {
  double worst = -1;
  std::size_t at = 0;
  for (auto s : splits_for(p, f))
    if (rates.rate(s) > worst) {
      worst = rates.rate(s);
      at = s;
    }
  return {worst, at};
}

inline constexpr std::uint64_t kSearchStream = 0x5EA2C4;
inline constexpr std::uint64_t kEvalStream = 0xE7A1;

// Minimises the worst-split failure over v on a stream independent of the
// final evaluation: coarse grid, then a finer grid around the best point.
inline double estimate_v(const Fig2Config& cfg, unsigned r) {
  auto objective = [&](double v) {
    return worst_rate(count_wins(cfg, r, v, cfg.search_trials, kSearchStream), cfg.split, cfg.f()).first;
  };
  double best_v = 0.5, best = 2;
  for (int i = 1; i < 100; ++i) {
    double v = i / 100.0;
    double val = objective(v);
    if (val < best) {
      best = val;
      best_v = v;
    }
  }
  const double centre = best_v;
  for (int i = -10; i <= 10; ++i) {
    double v = centre + i * 0.001;
    if (v <= 0 || v >= 1) continue;
    double val = objective(v);
    if (val < best) {
      best = val;
      best_v = v;
    }
  }
  return best_v;
}

// Q minimising the calibrated chain at this eps, used for the analytic v.
inline double chain_q(std::size_t n, double eps) {
  double q_min = 2.0 * std::exp(-2.0 * static_cast<double>(n) / 3.0);
  return std::clamp(18.0 * eps / std::log(2.0), q_min * (1 + 1e-12), 1.0 - 1e-12);
}

inline double analytic_v(std::size_t n, unsigned r) {
  double eps = std::ldexp(1.0, -static_cast<int>(r));
  return static_cast<double>(compute_v(n, BigFloat(chain_q(n, eps))));
}

inline Fig2Row fig2_row(const Fig2Config& cfg, unsigned r) {
  const double eps = std::ldexp(1.0, -static_cast<int>(r));
  std::optional<double> v;
  if (calibration_active(cfg, r)) {
    if (cfg.v_override)
      v = *cfg.v_override;
    else if (cfg.analytic_v)
      v = analytic_v(cfg.n, r);
    else
      v = estimate_v(cfg, r);
  }
  auto rates = count_wins(cfg, r, v, cfg.trials, kEvalStream);
  auto [fail, split] = worst_rate(rates, cfg.split, cfg.f());
  Fig2Row row;
  row.r = r;
  row.empirical_failure = fail;
  row.std_error = std::sqrt(std::max(fail * (1 - fail), 1e-12) / static_cast<double>(cfg.trials));
  row.theoretical_bound = cfg.calibrated ? calibrated_bound(cfg.n, eps) : uncalibrated_bound(cfg.n, eps);
  if (cfg.calibrated && !calibration_active(cfg, r)) row.theoretical_bound = uncalibrated_bound(cfg.n, eps);
  row.ideal = ideal_failure(r);
  row.v = v ? *v : std::min(eps, 1.0);
  row.worst_split = split;
  return row;
}

inline std::vector<Fig2Row> experiment_fig2(const Fig2Config& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("trials must be positive");
  std::vector<Fig2Row> rows;
  for (unsigned r = cfg.r_min; r <= cfg.r_max; ++r) rows.push_back(fig2_row(cfg, r));
  return rows;
}

inline std::string format_double(double x) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(8);
  os << x;
  return os.str();
}

inline void write_fig2_csv(std::ostream& out, const std::vector<Fig2Row>& rows) {
  out << "r,empirical_failure,theoretical_bound,ideal,v\n";
  for (const auto& row : rows)
    out << row.r << ',' << format_double(row.empirical_failure) << ',' << format_double(row.theoretical_bound) << ','
        << format_double(row.ideal) << ',' << format_double(row.v) << '\n';
}

}  // namespace coinlab
