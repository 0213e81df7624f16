#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dreplay/historian/historian.hpp"

namespace dreplay {

/// (task, instance, access index). The access index is the receive index
/// for messages and the port-read index for peripheral values.
struct AccessKey {
  TaskId task;
  std::uint64_t instance = 0;
  std::uint32_t index = 0;

  friend auto operator<=>(const AccessKey&, const AccessKey&) = default;
};

struct ReplayPlan {
  static constexpr std::uint16_t kVersion = 1;

  std::uint64_t scenario_hash = 0;
  std::string scenario_text;
  ConsistentWindow window;
  StartState start;
  std::vector<ControlFlowEvent> forced;                 // in seq order
  std::map<AccessKey, DataFlowRecord> injections;       // External MessageIn
  std::map<AccessKey, DataFlowRecord> port_values;      // PeripheralIn
  std::map<AccessKey, DataFlowRecord> verification;     // Internal MessageIn
  std::vector<DataFlowRecord> wakeups;                  // in recording order
  sim::Termination cause = sim::Termination::RunLimit;
  Tick t_fail = 0;
  std::vector<std::uint32_t> reference_checksums;

  sim::Scenario scenario() const;

  friend bool operator==(const ReplayPlan&, const ReplayPlan&) = default;
};

/// Throws Error(GapInControlFlow) if the forced range is not seq-dense.
ReplayPlan build_plan(const Trace& t, const ConsistentWindow& w, const StartState& start);

/// prune + find_start + build_plan on a copy of the trace.
ReplayPlan plan_from_trace(const Trace& t);

Bytes encode_plan(const ReplayPlan& p);
ReplayPlan decode_plan(std::span<const std::uint8_t> data);
void save_plan(const std::string& path, const ReplayPlan& p);
ReplayPlan load_plan(const std::string& path);

}  // namespace dreplay
