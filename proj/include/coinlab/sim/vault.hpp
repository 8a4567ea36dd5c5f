#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "coinlab/core/ids.hpp"

namespace coinlab {

// Simulator-owned store behind the ideal secret-sharing backend. A secret
// becomes visible to the adversary once the first correct process enables
// retrieval on its instance.
class IdealVault {
 public:
  // First deposit binds; later deposits for the same instance are ignored.
  void deposit(const Tag& key, ProcessId dealer, std::uint64_t secret) {
    auto [it, fresh] = entries_.try_emplace(key);
    if (!fresh) return;
    it->second.dealer = dealer;
    it->second.secret = secret;
  }

  std::optional<std::uint64_t> lookup(const Tag& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second.secret;
  }

  void enable(const Tag& key, bool by_correct) {
    if (by_correct) entries_[key].released = true;
  }

  std::optional<std::uint64_t> released_secret(const Tag& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end() || !it->second.released) return std::nullopt;
    return it->second.secret;
  }

  std::optional<ProcessId> dealer(const Tag& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second.dealer;
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (const auto& [key, e] : entries_) fn(key, e.dealer, e.secret, e.released);
  }

 private:
  struct Entry {
    ProcessId dealer{};
    std::optional<std::uint64_t> secret;
    bool released = false;
  };
  std::map<Tag, Entry> entries_;
};

}  // namespace coinlab
