#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coinlab/core/digest.hpp"
#include "coinlab/core/ids.hpp"

namespace coinlab {

enum class EventKind : std::uint8_t { send, deliver, corrupt, output, mark, reject };

inline const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::send: return "send";
    case EventKind::deliver: return "deliver";
    case EventKind::corrupt: return "corrupt";
    case EventKind::output: return "output";
    case EventKind::mark: return "mark";
    case EventKind::reject: return "reject";
  }
  return "?";
}

struct TraceEvent {
  std::uint64_t step = 0;
  EventKind kind = EventKind::send;
  ProcessId src;
  ProcessId dst;
  Tag tag;
  std::uint32_t bytes = 0;
  std::uint64_t digest = 0;  // payload fingerprint, or the value for output/mark
  std::string label;          // mark events only

  // Canonical export line; the trace hash is SHA-256 over these lines.
  std::string line() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%llu %s %u %u %s %u %016llx", static_cast<unsigned long long>(step),
                  event_kind_name(kind), src.value, dst.value, tag.to_string().c_str(), bytes,
                  static_cast<unsigned long long>(digest));
    std::string s(buf);
    if (!label.empty()) s += " " + label;
    return s;
  }
};

struct Counters {
  std::uint64_t messages = 0;
  std::uint64_t bits = 0;
  bool operator==(const Counters&) const = default;
};

struct Mark {
  std::uint64_t step;
  ProcessId process;
  std::string label;
  std::int64_t value;
  std::uint32_t depth;
};

struct Trace {
  SystemConfig config;
  std::vector<TraceEvent> events;  // filled only when events are kept
  std::map<std::uint16_t, Counters> delivered;
  std::map<std::uint16_t, Counters> sent;
  std::vector<std::optional<std::int64_t>> outputs;
  std::vector<std::uint64_t> output_step;
  std::vector<std::uint32_t> output_depth;
  std::vector<Mark> marks;
  ProcessSet corrupted;
  std::uint64_t steps = 0;
  std::uint64_t max_correct_skip = 0;
  std::uint64_t rejected_corruptions = 0;
  std::string hash;

  std::vector<ProcessId> correct() const {
    std::vector<ProcessId> out;
    for (std::uint32_t i = 0; i < config.n; ++i)
      if (!corrupted.contains(ProcessId{i})) out.push_back(ProcessId{i});
    return out;
  }

  // Correct process with the earliest output step (ties by lowest id).
  std::optional<ProcessId> first_finisher() const {
    std::optional<ProcessId> best;
    for (auto p : correct()) {
      if (!outputs[p.value]) continue;
      if (!best || output_step[p.value] < output_step[best->value]) best = p;
    }
    return best;
  }

  std::uint64_t total_bits() const {
    std::uint64_t b = 0;
    for (const auto& [fam, c] : delivered) b += c.bits;
    return b;
  }

  std::uint64_t bits_for(Module m) const {
    std::uint64_t b = 0;
    for (const auto& [fam, c] : delivered)
      if ((fam >> 8) == static_cast<unsigned>(m)) b += c.bits;
    return b;
  }
};

struct NonTermination : std::runtime_error {
  explicit NonTermination(const std::string& what) : std::runtime_error("non-termination: " + what) {}
};

struct Metrics {
  std::map<std::string, Counters> per_tag;
  std::optional<std::uint64_t> first_output_step;
  std::optional<std::uint64_t> last_output_step;
};

// Recomputes counters from the event list when it was kept, otherwise uses
// the running totals.
inline Metrics trace_metrics(const Trace& t) {
  Metrics m;
  if (!t.events.empty()) {
    for (const auto& e : t.events) {
      if (e.kind != EventKind::deliver) continue;
      auto& c = m.per_tag[family_name(e.tag.family())];
      c.messages += 1;
      c.bits += 8ULL * e.bytes;
    }
  } else {
    for (const auto& [fam, c] : t.delivered) m.per_tag[family_name(fam)] = c;
  }
  for (auto p : t.correct()) {
    if (p.value >= t.outputs.size() || !t.outputs[p.value]) continue;
    auto s = t.output_step[p.value];
    if (!m.first_output_step || s < *m.first_output_step) m.first_output_step = s;
    if (!m.last_output_step || s > *m.last_output_step) m.last_output_step = s;
  }
  return m;
}

}  // namespace coinlab
