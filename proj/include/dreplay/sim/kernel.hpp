#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dreplay/bytes.hpp"
#include "dreplay/sim/interpreter.hpp"
#include "dreplay/sim/scenario.hpp"
#include "dreplay/sim/state.hpp"

namespace dreplay::sim {

enum class SwitchKind : std::uint8_t {
  BlockingCall,       // outgoing task blocked (primitive, object)
  Preemption,         // outgoing task displaced by a higher-priority ready task
  InterruptDispatch,  // idle CPU, incoming woken by an interrupt
  DelayExpiry,        // idle CPU, incoming woken by its delay
  Activation,         // idle CPU, incoming ready since boot or woken by another task
  TaskExit,           // outgoing task executed HALT
};

enum class Termination : std::uint8_t { AllHalted, Failed, RunLimit, Deadlocked };

enum class Origin : std::uint8_t { Internal, External };

struct SwitchRecord {
  Tick tick = 0;
  std::optional<TaskId> from;
  std::optional<TaskId> to;
  SwitchKind kind = SwitchKind::Activation;
  Primitive primitive = Primitive::None;
  std::uint32_t object = 0;

  friend bool operator==(const SwitchRecord&, const SwitchRecord&) = default;
};

struct ExecutionResult {
  Tick end_tick = 0;
  Termination cause = Termination::RunLimit;
  std::vector<std::uint32_t> final_checksums;  // per task, context checksum
  std::vector<SwitchRecord> switches;
};

/// Instrumentation callbacks. Each fires before the kernel mutates state
/// further; the kernel reference is read-only and must not be re-entered.
class Kernel;
class KernelHooks {
 public:
  virtual ~KernelHooks() = default;

  /// Scheduling point between kernel steps; checkpoints are legal here.
  virtual void on_boundary(const Kernel&) {}
  virtual void on_task_switch(const SwitchRecord&, const Kernel&) {}
  virtual void on_blocking_call(TaskId, Primitive, std::uint32_t /*object*/, const Kernel&) {}
  virtual void on_interrupt(std::size_t /*index*/, QueueId, bool /*accepted*/, const Kernel&) {}
  virtual void on_msg_received(TaskId, ReceiveSlot, QueueId, const Bytes& /*payload*/, Origin, const Kernel&) {}
  virtual void on_peripheral_read(TaskId, PortId, std::uint8_t /*value*/, const Kernel&) {}
  virtual void on_activation(TaskId, const Kernel&) {}
  /// A parked SEND or SEM_WAIT of `task` was completed by `by`.
  virtual void on_unblocked(TaskId /*task*/, Primitive, std::uint32_t /*object*/, TaskId /*by*/, const Kernel&) {}
};

/// Reference-execution kernel: priority-preemptive with FIFO tie-break,
/// blocking queues and semaphores with handoff wakeups, tick-driven delays,
/// and externally scheduled interrupts.
class Kernel {
 public:
  explicit Kernel(const Scenario& scenario);
  Kernel(const Scenario& scenario, KernelState state);

  /// Runs to termination.
  ExecutionResult run(KernelHooks* hooks = nullptr);

  const Scenario& scenario() const { return *scenario_; }
  const KernelState& state() const { return state_; }
  Tick clock() const { return state_.clock; }

  Bytes checkpoint() const { return encode_state(state_); }
  static Kernel restore(const Scenario& scenario, std::span<const std::uint8_t> blob);

  /// Whether the message came from outside the replayed task set.
  bool is_external_sender(std::int32_t sender) const;

 private:
  class Services;
  friend class Services;

  bool step(KernelHooks& hooks, ExecutionResult& out);
  void deliver_interrupts(KernelHooks& hooks);
  void expire_delays();
  std::optional<TaskId> peek_ready() const;
  void take_ready(TaskId t);
  void make_ready(TaskId t, ReadyReason reason);
  void hand_over(TaskId receiver, QueueId q, const Bytes& payload, Origin origin, ReadyReason reason, KernelHooks& h);
  void switch_to(const SwitchRecord& rec, KernelHooks& hooks, ExecutionResult& out);
  bool execute(TaskId t, KernelHooks& hooks, ExecutionResult& out);
  void finish(ExecutionResult& out, Termination cause);
  int priority(TaskId t) const { return scenario_->tasks[t.value].priority; }

  const Scenario* scenario_;
  KernelState state_;
};

std::vector<std::uint32_t> final_checksums(const KernelState& k);

const char* to_string(SwitchKind k);
const char* to_string(Termination t);
const char* to_string(Origin o);

}  // namespace dreplay::sim
