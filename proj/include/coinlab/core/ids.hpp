#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace coinlab {

struct ProcessId {
  std::uint32_t value = 0;
  auto operator<=>(const ProcessId&) const = default;
};

inline constexpr std::size_t kMaxProcesses = 64;

// Set of process ids packed in one word; the simulator caps n at 64.
class ProcessSet {
 public:
  constexpr ProcessSet() = default;
  constexpr explicit ProcessSet(std::uint64_t bits) : bits_(bits) {}

  static constexpr ProcessSet all(std::size_t n) {
    return ProcessSet(n >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1));
  }

  constexpr void insert(ProcessId p) { bits_ |= std::uint64_t{1} << p.value; }
  constexpr void erase(ProcessId p) { bits_ &= ~(std::uint64_t{1} << p.value); }
  constexpr bool contains(ProcessId p) const { return (bits_ >> p.value) & 1U; }
  constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint64_t bits() const { return bits_; }

  constexpr ProcessSet operator|(ProcessSet o) const { return ProcessSet(bits_ | o.bits_); }
  constexpr ProcessSet operator&(ProcessSet o) const { return ProcessSet(bits_ & o.bits_); }
  constexpr ProcessSet minus(ProcessSet o) const { return ProcessSet(bits_ & ~o.bits_); }
  constexpr ProcessSet& operator|=(ProcessSet o) { bits_ |= o.bits_; return *this; }
  constexpr bool subset_of(ProcessSet o) const { return (bits_ & ~o.bits_) == 0; }
  constexpr bool operator==(const ProcessSet&) const = default;

  std::vector<ProcessId> members() const {
    std::vector<ProcessId> out;
    out.reserve(size());
    for (std::uint64_t b = bits_; b != 0; b &= b - 1)
      out.push_back(ProcessId{static_cast<std::uint32_t>(std::countr_zero(b))});
    return out;
  }

  std::string to_string() const {
    std::string s = "{";
    bool first = true;
    for (auto p : members()) {
      if (!first) s += ',';
      s += std::to_string(p.value);
      first = false;
    }
    return s + "}";
  }

 private:
  std::uint64_t bits_ = 0;
};

struct SystemConfig {
  std::size_t n = 4;
  std::size_t f = 1;
  unsigned lambda = 32;
  std::uint64_t master_seed = 0;

  std::size_t quorum() const { return n - f; }

  // f = 0 is accepted for layer tests; coin protocols check f >= 1 themselves.
  void validate() const {
    if (n == 0 || n > kMaxProcesses) throw std::invalid_argument("n must be in [1, 64]");
    if (n < 3 * f + 1) throw std::invalid_argument("n must be at least 3f+1");
    if (lambda < 32 || lambda > 60) throw std::invalid_argument("lambda must be in [32, 60]");
  }

  std::vector<ProcessId> processes() const {
    std::vector<ProcessId> out;
    for (std::uint32_t i = 0; i < n; ++i) out.push_back(ProcessId{i});
    return out;
  }
};

enum class Module : std::uint8_t {
  test = 0,
  brb = 1,
  avss = 2,
  rsd = 3,
  rsd_tickets = 4,
  gather = 5,
  baa = 6,
  coin = 7,
  bba = 8,
};

inline const char* module_name(Module m) {
  switch (m) {
    case Module::test: return "test";
    case Module::brb: return "brb";
    case Module::avss: return "avss";
    case Module::rsd: return "rsd";
    case Module::rsd_tickets: return "rsd_tickets";
    case Module::gather: return "gather";
    case Module::baa: return "baa";
    case Module::coin: return "coin";
    case Module::bba: return "bba";
  }
  return "unknown";
}

// Identifies one protocol instance. session separates repeated coin tosses
// (e.g. one per agreement round), lane separates sub-protocols of a module.
struct Tag {
  std::uint32_t session = 0;
  Module module = Module::test;
  std::uint8_t lane = 0;
  std::uint32_t instance = 0;

  auto operator<=>(const Tag&) const = default;

  Tag with_lane(std::uint8_t l) const { return Tag{session, module, l, instance}; }
  Tag with_instance(std::uint32_t i) const { return Tag{session, module, lane, i}; }

  std::uint16_t family() const {
    return static_cast<std::uint16_t>((static_cast<unsigned>(module) << 8) | lane);
  }

  std::string to_string() const {
    return std::to_string(session) + "." + module_name(module) + "." + std::to_string(lane) + "." +
           std::to_string(instance);
  }
};

inline std::string family_name(std::uint16_t family) {
  return std::string(module_name(static_cast<Module>(family >> 8))) + "/" + std::to_string(family & 0xFF);
}

}  // namespace coinlab
