#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dreplay/bytes.hpp"
#include "dreplay/sim/kernel.hpp"
#include "dreplay/sim/state.hpp"
#include "dreplay/types.hpp"

namespace dreplay {

using sim::Origin;
using sim::Primitive;
using sim::SwitchKind;

/// A precise point in one task's execution: pc analog, how many times that
/// pc was already visited in this instance, and the context checksum.
struct Marker {
  TaskId task;
  std::uint32_t pc = 0;
  std::uint32_t occurrence = 0;
  std::uint64_t instance = 0;
  std::uint32_t checksum = 0;

  friend bool operator==(const Marker&, const Marker&) = default;
};

Marker marker_of(TaskId task, const sim::TaskControlBlock& tcb);

struct ControlFlowEvent {
  std::uint64_t seq = 0;
  Tick tick = 0;
  SwitchKind kind = SwitchKind::Activation;
  Primitive primitive = Primitive::None;
  std::uint32_t object = 0;
  std::optional<TaskId> from;
  std::optional<TaskId> to;
  std::optional<Marker> marker;  // of the outgoing task

  sim::SwitchRecord as_switch() const { return {tick, from, to, kind, primitive, object}; }

  friend bool operator==(const ControlFlowEvent&, const ControlFlowEvent&) = default;
};

/// Wakeup: a parked SEND / SEM_WAIT completed by a task outside the replayed
/// set. object = queue or semaphore, index = pc of the parked statement,
/// bytes = {primitive}.
enum class DataKind : std::uint8_t { MessageIn, PeripheralIn, StateSnapshot, Wakeup };

struct DataFlowRecord {
  TaskId task;
  std::uint64_t instance = 0;
  Tick tick = 0;
  DataKind kind = DataKind::MessageIn;
  std::uint32_t object = 0;  // queue (MessageIn) or port (PeripheralIn)
  std::uint32_t index = 0;   // receive index or port access index within the instance
  Origin origin = Origin::Internal;
  Bytes bytes;  // payload, {port value}, or filtered state bytes

  friend bool operator==(const DataFlowRecord&, const DataFlowRecord&) = default;
};

struct CheckpointRecord {
  Tick tick = 0;
  Bytes kernel;
  std::vector<std::uint32_t> task_checksums;
  std::vector<std::uint64_t> task_instances;

  friend bool operator==(const CheckpointRecord&, const CheckpointRecord&) = default;
};

void encode(ByteWriter& w, const Marker& m);
void encode(ByteWriter& w, const ControlFlowEvent& e);
void encode(ByteWriter& w, const DataFlowRecord& r);
void encode(ByteWriter& w, const CheckpointRecord& c);

Marker decode_marker(ByteReader& r);
ControlFlowEvent decode_control_event(ByteReader& r);
DataFlowRecord decode_data_record(ByteReader& r);
CheckpointRecord decode_checkpoint(ByteReader& r);

/// Bytes a probe stores for the record (the ProbeStats byte count).
std::size_t logged_bytes(const ControlFlowEvent& e);
std::size_t logged_bytes(const DataFlowRecord& r);
std::size_t logged_bytes(const CheckpointRecord& c);

const char* to_string(DataKind k);

}  // namespace dreplay
