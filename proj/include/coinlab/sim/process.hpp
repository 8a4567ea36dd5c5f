#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>

#include "coinlab/core/bytes.hpp"
#include "coinlab/core/ids.hpp"
#include "coinlab/core/rng.hpp"

namespace coinlab {

struct Envelope {
  ProcessId src;
  ProcessId dst;
  Tag tag;
  Bytes payload;
  std::uint64_t seq = 0;
  std::uint64_t enqueue_step = 0;
  std::uint32_t depth = 0;
};

// What a protocol state machine may do while handling an event.
class Context {
 public:
  virtual ~Context() = default;

  virtual ProcessId self() const = 0;
  virtual const SystemConfig& config() const = 0;
  virtual std::uint64_t step() const = 0;

  virtual void send(ProcessId dst, const Tag& tag, Bytes payload) = 0;
  // Top-level output; only the first call per process counts.
  virtual void output(std::int64_t value) = 0;
  // Instrumentation event recorded in the trace.
  virtual void mark(std::string_view label, std::int64_t value = 0) = 0;
  // Private randomness stream for (master seed, self, tag).
  virtual Rng& rng(const Tag& tag) = 0;

  virtual void vault_deposit(const Tag& key, std::uint64_t secret) = 0;
  virtual void vault_enable(const Tag& key) = 0;
  virtual std::optional<std::uint64_t> vault_lookup(const Tag& key) const = 0;

  void send_all(const Tag& tag, const Bytes& payload) {
    for (std::uint32_t j = 0; j < config().n; ++j) send(ProcessId{j}, tag, payload);
  }
};

class Process {
 public:
  virtual ~Process() = default;
  virtual void start(Context& ctx) = 0;
  virtual void receive(Context& ctx, const Envelope& env) = 0;
};

using ProcessFactory = std::function<std::unique_ptr<Process>(ProcessId)>;

// Forwards everything to another context; subclasses override pieces.
class ForwardingContext : public Context {
 public:
  explicit ForwardingContext(Context& inner) : inner_(inner) {}
  ProcessId self() const override { return inner_.self(); }
  const SystemConfig& config() const override { return inner_.config(); }
  std::uint64_t step() const override { return inner_.step(); }
  void send(ProcessId dst, const Tag& tag, Bytes payload) override { inner_.send(dst, tag, std::move(payload)); }
  void output(std::int64_t value) override { inner_.output(value); }
  void mark(std::string_view label, std::int64_t value) override { inner_.mark(label, value); }
  Rng& rng(const Tag& tag) override { return inner_.rng(tag); }
  void vault_deposit(const Tag& key, std::uint64_t secret) override { inner_.vault_deposit(key, secret); }
  void vault_enable(const Tag& key) override { inner_.vault_enable(key); }
  std::optional<std::uint64_t> vault_lookup(const Tag& key) const override { return inner_.vault_lookup(key); }

 protected:
  Context& inner_;
};

}  // namespace coinlab
