#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

#include "coinlab/sim/process.hpp"

namespace coinlab {

// One toss of some coin protocol, embedded in a process.
class CoinInstance {
 public:
  using OutputFn = std::function<void(Context&, std::uint64_t)>;
  virtual ~CoinInstance() = default;
  virtual void toss(Context& ctx) = 0;
  virtual bool handle(Context& ctx, const Envelope& env) = 0;
  virtual std::uint64_t domain() const = 0;
  std::optional<std::uint64_t> output() const { return output_; }
  OutputFn on_output;

 protected:
  void emit(Context& ctx, std::uint64_t value) {
    if (output_) return;
    output_ = value;
    if (on_output) on_output(ctx, value);
  }
  std::optional<std::uint64_t> output_;
};

// Standalone process that tosses one coin at start and outputs its value.
template <class CoinT>
class CoinProcess : public Process {
 public:
  explicit CoinProcess(std::unique_ptr<CoinT> coin) : coin_(std::move(coin)) {
    coin_->on_output = [](Context& ctx, std::uint64_t v) { ctx.output(static_cast<std::int64_t>(v)); };
  }
  void start(Context& ctx) override { coin_->toss(ctx); }
  void receive(Context& ctx, const Envelope& env) override { coin_->handle(ctx, env); }
  CoinT& coin() { return *coin_; }

 private:
  std::unique_ptr<CoinT> coin_;
};

}  // namespace coinlab
