#pragma once

#include <optional>

#include "dreplay/bytes.hpp"
#include "dreplay/sim/scenario.hpp"
#include "dreplay/sim/state.hpp"

namespace dreplay::sim {

/// Kernel services the interpreter calls for blocking and I/O statements.
/// The reference kernel and the replay engine implement them differently;
/// the statement semantics stay in one place.
///
/// A call that returns false / nullopt has parked the task: its state,
/// pending operation and blocked-list membership are already set.
class Primitives {
 public:
  virtual ~Primitives() = default;

  virtual bool send(TaskId task, QueueId queue, Bytes payload) = 0;
  virtual std::optional<Bytes> recv(TaskId task, QueueId queue) = 0;
  virtual bool sem_wait(TaskId task, SemId sem) = 0;
  virtual void sem_signal(TaskId task, SemId sem) = 0;
  /// Always parks the caller.
  virtual void delay(TaskId task, std::uint32_t ticks) = 0;
  virtual std::uint8_t read_port(TaskId task, PortId port) = 0;
  /// A new instance started (after the activation message was stored).
  virtual void activated(TaskId task) = 0;
};

enum class VisitOutcome { Executed, Blocked, Halted, Failed };

/// Executes one visit (one tick, or a zero-tick blocking attempt) of the
/// statement at tcb.pc. Executed / Halted / Failed consume exactly one tick.
VisitOutcome execute_visit(TaskControlBlock& tcb, TaskId task, const TaskProgram& program, const Scenario& scenario,
                           Primitives& prims);

struct ReceiveSlot {
  std::uint64_t instance = 0;
  std::uint32_t index = 0;
  bool activation = false;

  friend auto operator<=>(const ReceiveSlot&, const ReceiveSlot&) = default;
};

/// The (instance, receive index) the next receive from `queue` at tcb.pc is
/// attributed to. Activation receives open instance+1 at index 0.
ReceiveSlot receive_slot(const TaskControlBlock& tcb, const TaskProgram& program, QueueId queue);

/// Finishes a receive: stores the payload, advances pc, and on the
/// activation queue starts a new instance. Returns true if it did.
bool deliver_message(TaskControlBlock& tcb, const TaskProgram& program, QueueId queue, const Bytes& payload);

/// Finishes a parked SEND / SEM_WAIT / DELAY by advancing pc.
void complete_blocked(TaskControlBlock& tcb);

bool is_activation_receive(const TaskControlBlock& tcb, const TaskProgram& program, QueueId queue);

std::int64_t evaluate(const Expr& e, const Bytes& state);

}  // namespace dreplay::sim
