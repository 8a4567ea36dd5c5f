#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coinlab/core/ids.hpp"
#include "coinlab/core/rng.hpp"
#include "coinlab/sim/process.hpp"
#include "coinlab/sim/vault.hpp"

namespace coinlab {

struct EnvelopeMeta {
  ProcessId src;
  ProcessId dst;
  Tag tag;
  std::size_t bytes;
  std::uint64_t seq;
  std::uint64_t enqueue_step;
};

// Everything the scheduler may look at. Payloads between two correct
// processes are hidden (private channels), as are vault secrets that no
// correct process has released.
class AdversaryView {
 public:
  AdversaryView(const SystemConfig& cfg, const std::vector<Envelope>& pending, std::uint64_t step,
                ProcessSet corrupted, ProcessSet finished, const IdealVault& vault)
      : cfg_(cfg), pending_(pending), step_(step), corrupted_(corrupted), finished_(finished), vault_(vault) {}

  const SystemConfig& config() const { return cfg_; }
  std::uint64_t step() const { return step_; }
  ProcessSet corrupted() const { return corrupted_; }
  ProcessSet finished() const { return finished_; }
  std::size_t pending_count() const { return pending_.size(); }

  EnvelopeMeta meta(std::size_t i) const {
    const auto& e = pending_[i];
    return EnvelopeMeta{e.src, e.dst, e.tag, e.payload.size(), e.seq, e.enqueue_step};
  }

  std::optional<std::span<const std::uint8_t>> payload(std::size_t i) const {
    const auto& e = pending_[i];
    if (!corrupted_.contains(e.src) && !corrupted_.contains(e.dst)) return std::nullopt;
    return std::span<const std::uint8_t>(e.payload);
  }

  std::optional<std::uint64_t> released_secret(const Tag& key) const { return vault_.released_secret(key); }

 private:
  const SystemConfig& cfg_;
  const std::vector<Envelope>& pending_;
  std::uint64_t step_;
  ProcessSet corrupted_;
  ProcessSet finished_;
  const IdealVault& vault_;
};

struct Decision {
  std::size_t deliver = 0;  // index into the pending list
  std::optional<ProcessId> corrupt;
};

class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual std::string name() const = 0;

  // Called at the start of every run with a stream derived from the seed.
  virtual void reset(const SystemConfig& cfg, Rng rng) {
    cfg_ = cfg;
    rng_ = rng;
  }
  virtual std::vector<ProcessId> initial_corruptions() { return {}; }
  virtual Decision choose(const AdversaryView& view) = 0;

  // Replacement behaviour for a newly corrupted process. The honest object
  // is handed over so the adversary sees the full state. Default: crash.
  virtual std::shared_ptr<Process> take_over(ProcessId p, std::shared_ptr<Process> honest,
                                             const ProcessFactory& factory);

 protected:
  SystemConfig cfg_;
  Rng rng_;
};

class SilentProcess : public Process {
 public:
  void start(Context&) override {}
  void receive(Context&, const Envelope&) override {}
};

inline std::shared_ptr<Process> Adversary::take_over(ProcessId, std::shared_ptr<Process>, const ProcessFactory&) {
  return std::make_shared<SilentProcess>();
}

}  // namespace coinlab
