#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "coinlab/coins/approx.hpp"
#include "coinlab/irs/code.hpp"

namespace coinlab {

struct SubsetParams {
  unsigned items = 10;
  unsigned size = 4;
  unsigned max_swaps = 1;
  Rational epsilon;  // coin precision; must satisfy epsilon <= max_swaps / C(items, size)
};

inline SubsetParams subset_params(unsigned items, unsigned size, unsigned max_swaps) {
  if (max_swaps < 1) throw std::invalid_argument("max_swaps must be at least 1");
  if (size > items) throw std::invalid_argument("subset larger than item set");
  BigInt d = binomial(items, size);
  return SubsetParams{items, size, max_swaps, Rational(BigInt(max_swaps), d)};
}

// Approximate coin over the code indices of C(items, size); adjacent indices
// differ by one swap, so outputs within ring distance k share size-k items.
class SubsetSelector : public CoinInstance {
 public:
  SubsetSelector(const SystemConfig& cfg, std::uint32_t session, SubsetParams p,
                 AvssBackend backend = AvssBackend::ideal)
      : params_(p), coin_(cfg, session, coin_params(cfg, p, backend)) {
    coin_.on_output = [this](Context& ctx, std::uint64_t index) {
      subset_ = selected_items(codeword(params_.items, params_.size, BigInt(index)));
      emit(ctx, index);
    };
  }

  std::uint64_t domain() const override { return coin_.domain(); }
  void toss(Context& ctx) override { coin_.toss(ctx); }
  bool handle(Context& ctx, const Envelope& env) override { return coin_.handle(ctx, env); }
  const std::vector<unsigned>& subset() const { return subset_; }

 private:
  static ApproxParams coin_params(const SystemConfig& cfg, const SubsetParams& p, AvssBackend backend) {
    BigInt d = binomial(p.items, p.size);
    if (d >= BigInt(kFieldPrime)) throw std::invalid_argument("code too large for the coin domain");
    if (p.epsilon <= 0 || p.epsilon > Rational(BigInt(p.max_swaps), d))
      throw std::invalid_argument("epsilon above max_swaps / C(items, size)");
    return approx_params(static_cast<std::uint64_t>(d), p.epsilon, cfg.f, backend);
  }

  SubsetParams params_;
  ApproxCoin coin_;
  std::vector<unsigned> subset_;
};

}  // namespace coinlab
