#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "coinlab/core/bytes.hpp"
#include "coinlab/core/ids.hpp"
#include "coinlab/sim/process.hpp"

namespace coinlab {

// Three-wave gather over a monotone accept predicate. Wave sets are sent
// point to point; a received set is counted only once every member is
// accepted locally.
class Gather {
 public:
  using AcceptFn = std::function<bool(ProcessId)>;
  using OutputFn = std::function<void(Context&, ProcessSet)>;

  static constexpr std::uint8_t kWave1 = 0, kWave2 = 1;

  Gather(const SystemConfig& cfg, Tag base, AcceptFn accept)
      : n_(cfg.n), f_(cfg.f), base_(base), accept_(std::move(accept)) {}

  OutputFn on_output;

  void start(Context& ctx) {
    started_ = true;
    progress(ctx);
  }

  // Call whenever the accept predicate may have become true for more ids.
  void accept_changed(Context& ctx) {
    if (started_) progress(ctx);
  }

  bool handle(Context& ctx, const Envelope& env) {
    if (env.tag.session != base_.session || env.tag.module != base_.module) return false;
    try {
      Reader r(env.payload);
      ProcessSet s(r.u64());
      r.expect_done();
      if (s.size() < n_ - f_ || !s.subset_of(ProcessSet::all(n_))) return true;
      auto& pool = env.tag.lane == kWave1 ? pool1_ : pool2_;
      if (env.tag.lane > kWave2 || pool.count(env.src)) return true;
      pool[env.src] = s;
    } catch (const MalformedMessage&) {
      return true;
    }
    if (started_) progress(ctx);
    return true;
  }

  // Records for the offline core oracle.
  struct Record {
    std::optional<ProcessSet> wave1;
    ProcessSet wave1_counted;  // senders whose wave-1 sets were counted before wave 2
    std::optional<ProcessSet> wave2;
    std::uint64_t wave2_step = 0;
    std::optional<ProcessSet> output;
    std::uint64_t output_step = 0;
  };
  const Record& record() const { return rec_; }
  std::optional<ProcessSet> output() const { return rec_.output; }

 private:
  bool all_accepted(ProcessSet s) const {
    for (auto p : s.members())
      if (!accept_(p)) return false;
    return true;
  }

  void send_wave(Context& ctx, std::uint8_t lane, ProcessSet s) {
    Writer w;
    w.u64(s.bits());
    ctx.send_all(base_.with_lane(lane), w.take());
  }

  void progress(Context& ctx) {
    if (!rec_.wave1) {
      ProcessSet t;
      for (std::uint32_t j = 0; j < n_; ++j)
        if (accept_(ProcessId{j})) t.insert(ProcessId{j});
      if (t.size() >= n_ - f_) {
        rec_.wave1 = t;
        send_wave(ctx, kWave1, t);
      }
    }
    for (const auto& [j, t] : pool1_) {
      if (counted1_.contains(j) || !all_accepted(t)) continue;
      counted1_.insert(j);
      union1_ |= t;
    }
    if (!rec_.wave2 && counted1_.size() >= n_ - f_) {
      rec_.wave2 = union1_;
      rec_.wave1_counted = counted1_;
      rec_.wave2_step = ctx.step();
      send_wave(ctx, kWave2, union1_);
    }
    if (!rec_.wave2 || rec_.output) return;
    for (const auto& [j, u] : pool2_) {
      if (counted2_.contains(j) || !all_accepted(u)) continue;
      counted2_.insert(j);
      union2_ |= u;
    }
    if (counted2_.size() >= n_ - f_) {
      rec_.output = union2_;
      rec_.output_step = ctx.step();
      if (on_output) on_output(ctx, union2_);
    }
  }

  std::size_t n_, f_;
  Tag base_;
  AcceptFn accept_;
  bool started_ = false;
  std::map<ProcessId, ProcessSet> pool1_, pool2_;
  ProcessSet counted1_, counted2_, union1_, union2_;
  Record rec_;
};

struct CoreCheck {
  ProcessSet core;  // bound at the first correct output
  ProcessSet full_core;
  bool contained = false;
  bool large_enough = false;
};

// Offline core oracle. A correct process k whose wave-1 set was counted by
// at least f+1 correct wave-2 senders has that set inside every correct
// output: any output counts n-f wave-2 sets, which must include one of them.
// The bound core only uses wave-2 sets sent before the first correct output.
inline CoreCheck compute_common_core(const SystemConfig& cfg, const std::vector<Gather::Record>& records,
                                     ProcessSet correct) {
  std::optional<std::uint64_t> first_output;
  for (auto p : correct.members()) {
    const auto& r = records[p.value];
    if (r.output && (!first_output || r.output_step < *first_output)) first_output = r.output_step;
  }
  if (!first_output) throw std::logic_error("no correct gather output in trace");

  auto core_from = [&](bool only_early) {
    ProcessSet core;
    for (auto k : correct.members()) {
      if (!records[k.value].wave1) continue;
      std::size_t hits = 0;
      for (auto j : correct.members()) {
        const auto& r = records[j.value];
        if (!r.wave2 || (only_early && r.wave2_step > *first_output)) continue;
        if (r.wave1_counted.contains(k)) ++hits;
      }
      if (hits >= cfg.f + 1) core |= *records[k.value].wave1;
    }
    return core;
  };

  CoreCheck out;
  out.core = core_from(true);
  out.full_core = core_from(false);
  out.contained = true;
  for (auto p : correct.members()) {
    const auto& r = records[p.value];
    if (!r.output || !out.full_core.subset_of(*r.output)) out.contained = false;
  }
  out.large_enough = out.core.size() >= cfg.n - cfg.f && out.full_core.size() >= cfg.n - cfg.f;
  return out;
}

}  // namespace coinlab
