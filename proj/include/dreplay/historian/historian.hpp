#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dreplay/error.hpp"
#include "dreplay/recorder/records.hpp"
#include "dreplay/recorder/trace.hpp"

namespace dreplay {

struct ConsistentWindow {
  Tick t_min = 0;
  Tick t_fail = 0;

  friend bool operator==(const ConsistentWindow&, const ConsistentWindow&) = default;
};

/// What the window computation needs to know about one cyclic buffer.
struct BufferExtent {
  std::optional<Tick> oldest;            // oldest retained entry
  std::optional<Tick> newest_discarded;  // newest entry ever dropped
};

template <typename T>
BufferExtent extent_of(const RingBuffer<T>& ring) {
  return {ring.empty() ? std::nullopt : std::optional<Tick>(ring.front().tick), ring.newest_discarded()};
}

/// The lower bound a single buffer puts on the window. A buffer emptied by a
/// previous prune still covers everything after its last discarded entry.
/// Throws Error(EmptyBuffer) if the buffer was never written.
Tick lower_bound_of(const BufferExtent& b, const std::string& name);

/// max over buffers of lower_bound_of. Throws EmptyBuffer / InsufficientOverlap.
ConsistentWindow compute_window(std::span<const BufferExtent> buffers, std::span<const std::string> names, Tick t_fail);

/// Mandatory buffers: control flow, checkpoints, each replayed task's data ring.
struct MandatoryBuffers {
  std::vector<std::string> names;
  std::vector<BufferExtent> extents;
};
MandatoryBuffers mandatory_buffers(const Trace& t);

ConsistentWindow compute_window(const Trace& t);

struct BufferReport {
  std::string name;
  std::size_t retained_before = 0;
  std::size_t discarded = 0;
  std::uint64_t overwritten = 0;
};

struct PruneReport {
  ConsistentWindow window;
  std::vector<BufferReport> buffers;
};

/// Drops every mandatory-buffer entry older than t_min.
PruneReport prune(Trace& t);

struct StartState {
  Tick t_start = 0;
  CheckpointRecord checkpoint;
  std::vector<std::optional<DataFlowRecord>> snapshots;  // per task; governing snapshot if retained

  friend bool operator==(const StartState&, const StartState&) = default;
};

/// Earliest checkpoint in [t_min, t_fail] from which every mandatory log is
/// complete. Throws Error(NoConsistentStart).
StartState find_start(const Trace& t, const ConsistentWindow& w);

std::string format_report(const PruneReport& report, const std::optional<StartState>& start);

}  // namespace dreplay
