#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "dreplay/bytes.hpp"
#include "dreplay/sim/scenario.hpp"
#include "dreplay/types.hpp"

namespace dreplay::sim {

enum class TaskState : std::uint8_t { Ready, Running, BlockedOnQueue, BlockedOnSem, Delayed, Halted, Failed };

/// Operation a blocked task is waiting to complete.
enum class Primitive : std::uint8_t { None, Send, Recv, SemWait, SemSignal, Delay };

/// Why a Ready task became ready; decides the switch kind when it is
/// dispatched onto an idle CPU.
enum class ReadyReason : std::uint8_t { Boot, Interrupt, DelayExpiry, TaskEvent, Preempted };

inline constexpr std::int32_t kInterruptSender = -1;

struct Message {
  std::int32_t sender = kInterruptSender;  // task index, or kInterruptSender
  Bytes payload;

  friend bool operator==(const Message&, const Message&) = default;
};

struct TaskControlBlock {
  TaskState state = TaskState::Ready;
  std::uint32_t pc = 0;
  std::vector<std::uint32_t> loop_stack;
  std::uint64_t instance = 0;
  Bytes state_bytes;
  std::uint64_t instr_in_instance = 0;

  /// visits[pc] = statement ticks/attempts at pc in the current instance.
  /// Sized body.size() + 1; the extra slot is the implicit end-of-body receive.
  std::vector<std::uint32_t> visits;
  std::uint32_t compute_left = 0;
  std::uint32_t recv_index = 0;  // receives in the current instance
  std::uint32_t port_index = 0;  // port reads in the current instance

  Primitive pending = Primitive::None;
  std::uint32_t pending_object = 0;
  Bytes pending_payload;  // blocked SEND
  Tick wake_tick = 0;     // Delayed
  ReadyReason ready_reason = ReadyReason::Boot;

  friend bool operator==(const TaskControlBlock&, const TaskControlBlock&) = default;
};

struct QueueState {
  std::deque<Message> pending;
  std::deque<TaskId> blocked_receivers;
  std::deque<TaskId> blocked_senders;
  std::uint64_t sent = 0;       // messages accepted (handed off or enqueued)
  std::uint64_t delivered = 0;  // messages handed to a receiver
  std::uint64_t dropped = 0;    // interrupt posts refused by a full queue

  friend bool operator==(const QueueState&, const QueueState&) = default;
};

struct SemaphoreState {
  std::uint32_t count = 0;
  std::deque<TaskId> blocked;

  friend bool operator==(const SemaphoreState&, const SemaphoreState&) = default;
};

/// Everything the simulator needs to continue a run, apart from the
/// immutable Scenario. Encodes to the kernel checkpoint blob.
struct KernelState {
  Tick clock = 0;
  bool booted = false;
  std::vector<TaskControlBlock> tasks;
  std::vector<QueueState> queues;
  std::vector<SemaphoreState> semaphores;
  std::uint64_t next_interrupt = 0;
  std::vector<std::uint64_t> port_cursors;
  std::optional<TaskId> running;
  std::vector<TaskId> ready;  // FIFO order; selection takes the first of the best priority

  TaskControlBlock& tcb(TaskId t) { return tasks.at(t.value); }
  const TaskControlBlock& tcb(TaskId t) const { return tasks.at(t.value); }

  friend bool operator==(const KernelState&, const KernelState&) = default;
};

/// Fresh state at tick 0: every task Ready in instance 0, declaration order.
KernelState boot_state(const Scenario& s);

Bytes encode_state(const KernelState& k);
void encode_state(ByteWriter& w, const KernelState& k);
/// Throws Error(TraceFormat) when the blob does not fit the scenario.
KernelState decode_state(const Scenario& s, std::span<const std::uint8_t> blob);
KernelState decode_state(const Scenario& s, ByteReader& r);

const char* to_string(TaskState s);
const char* to_string(Primitive p);

}  // namespace dreplay::sim
