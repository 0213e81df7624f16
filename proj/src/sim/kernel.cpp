#include "dreplay/sim/kernel.hpp"

#include <algorithm>

#include "dreplay/recorder/checksum.hpp"

namespace dreplay::sim {

// Reference semantics of the blocking primitives. Wakeups hand the
// operation over to the woken task, so a woken task never re-attempts.
class Kernel::Services final : public Primitives {
 public:
  Services(Kernel& k, KernelHooks& h) : k_(k), h_(h) {}

  bool send(TaskId t, QueueId q, Bytes payload) override {
    h_.on_blocking_call(t, Primitive::Send, q.value, k_);
    auto& st = k_.state_;
    auto& qs = st.queues.at(q.value);
    auto origin = k_.is_external_sender(static_cast<std::int32_t>(t.value)) ? Origin::External : Origin::Internal;
    if (!qs.blocked_receivers.empty()) {
      auto r = qs.blocked_receivers.front();
      qs.blocked_receivers.pop_front();
      qs.sent += 1;
      qs.delivered += 1;
      k_.hand_over(r, q, payload, origin, ReadyReason::TaskEvent, h_);
      return true;
    }
    if (qs.pending.size() >= k_.scenario_->queues[q.value].capacity) {
      auto& tcb = st.tcb(t);
      tcb.state = TaskState::BlockedOnQueue;
      tcb.pending = Primitive::Send;
      tcb.pending_object = q.value;
      tcb.pending_payload = std::move(payload);
      qs.blocked_senders.push_back(t);
      return false;
    }
    qs.pending.push_back({static_cast<std::int32_t>(t.value), std::move(payload)});
    qs.sent += 1;
    return true;
  }

  std::optional<Bytes> recv(TaskId t, QueueId q) override {
    h_.on_blocking_call(t, Primitive::Recv, q.value, k_);
    auto& st = k_.state_;
    auto& qs = st.queues.at(q.value);
    auto& tcb = st.tcb(t);
    if (qs.pending.empty()) {
      tcb.state = TaskState::BlockedOnQueue;
      tcb.pending = Primitive::Recv;
      tcb.pending_object = q.value;
      qs.blocked_receivers.push_back(t);
      return std::nullopt;
    }
    auto msg = std::move(qs.pending.front());
    qs.pending.pop_front();
    qs.delivered += 1;
    auto slot = receive_slot(tcb, k_.scenario_->tasks[t.value], q);
    auto origin = k_.is_external_sender(msg.sender) ? Origin::External : Origin::Internal;
    h_.on_msg_received(t, slot, q, msg.payload, origin, k_);
    if (!qs.blocked_senders.empty()) {
      auto s = qs.blocked_senders.front();
      qs.blocked_senders.pop_front();
      auto& stcb = st.tcb(s);
      qs.pending.push_back({static_cast<std::int32_t>(s.value), std::move(stcb.pending_payload)});
      qs.sent += 1;
      h_.on_unblocked(s, Primitive::Send, q.value, t, k_);
      complete_blocked(stcb);
      k_.make_ready(s, ReadyReason::TaskEvent);
    }
    return std::move(msg.payload);
  }

  bool sem_wait(TaskId t, SemId s) override {
    h_.on_blocking_call(t, Primitive::SemWait, s.value, k_);
    auto& sem = k_.state_.semaphores.at(s.value);
    if (sem.count > 0) {
      sem.count -= 1;
      return true;
    }
    auto& tcb = k_.state_.tcb(t);
    tcb.state = TaskState::BlockedOnSem;
    tcb.pending = Primitive::SemWait;
    tcb.pending_object = s.value;
    sem.blocked.push_back(t);
    return false;
  }

  void sem_signal(TaskId t, SemId s) override {
    h_.on_blocking_call(t, Primitive::SemSignal, s.value, k_);
    auto& sem = k_.state_.semaphores.at(s.value);
    if (sem.blocked.empty()) {
      sem.count += 1;
      return;
    }
    auto w = sem.blocked.front();
    sem.blocked.pop_front();
    h_.on_unblocked(w, Primitive::SemWait, s.value, t, k_);
    complete_blocked(k_.state_.tcb(w));
    k_.make_ready(w, ReadyReason::TaskEvent);
  }

  void delay(TaskId t, std::uint32_t ticks) override {
    h_.on_blocking_call(t, Primitive::Delay, ticks, k_);
    auto& tcb = k_.state_.tcb(t);
    tcb.state = TaskState::Delayed;
    tcb.pending = Primitive::Delay;
    tcb.pending_object = ticks;
    tcb.wake_tick = k_.state_.clock + ticks;
  }

  std::uint8_t read_port(TaskId t, PortId p) override {
    auto& cursor = k_.state_.port_cursors.at(p.value);
    auto v = port_value(*k_.scenario_, p, cursor);
    cursor += 1;
    h_.on_peripheral_read(t, p, v, k_);
    return v;
  }

  void activated(TaskId t) override { h_.on_activation(t, k_); }

 private:
  Kernel& k_;
  KernelHooks& h_;
};

namespace {
class NullHooks final : public KernelHooks {};
}  // namespace

Kernel::Kernel(const Scenario& scenario) : scenario_(&scenario), state_(boot_state(scenario)) {}

Kernel::Kernel(const Scenario& scenario, KernelState state) : scenario_(&scenario), state_(std::move(state)) {}

Kernel Kernel::restore(const Scenario& scenario, std::span<const std::uint8_t> blob) {
  return Kernel(scenario, decode_state(scenario, blob));
}

bool Kernel::is_external_sender(std::int32_t sender) const {
  return sender == kInterruptSender || !scenario_->tasks.at(static_cast<std::size_t>(sender)).replayed;
}

ExecutionResult Kernel::run(KernelHooks* hooks) {
  NullHooks null;
  KernelHooks& h = hooks ? *hooks : null;
  ExecutionResult out;
  if (!state_.booted) {
    state_.booted = true;
    for (std::uint32_t i = 0; i < state_.tasks.size(); ++i) h.on_activation(TaskId{i}, *this);
  }
  while (step(h, out)) {
  }
  return out;
}

void Kernel::hand_over(TaskId receiver, QueueId q, const Bytes& payload, Origin origin, ReadyReason reason,
                       KernelHooks& h) {
  auto& tcb = state_.tcb(receiver);
  const auto& prog = scenario_->tasks[receiver.value];
  auto slot = receive_slot(tcb, prog, q);
  h.on_msg_received(receiver, slot, q, payload, origin, *this);
  bool activated = deliver_message(tcb, prog, q, payload);
  make_ready(receiver, reason);
  if (activated) h.on_activation(receiver, *this);
}

void Kernel::make_ready(TaskId t, ReadyReason reason) {
  auto& tcb = state_.tcb(t);
  tcb.state = TaskState::Ready;
  tcb.ready_reason = reason;
  state_.ready.push_back(t);
}

std::optional<TaskId> Kernel::peek_ready() const {
  std::optional<TaskId> best;
  for (auto t : state_.ready)
    if (!best || priority(t) < priority(*best)) best = t;
  return best;
}

void Kernel::take_ready(TaskId t) {
  auto it = std::find(state_.ready.begin(), state_.ready.end(), t);
  state_.ready.erase(it);
}

void Kernel::deliver_interrupts(KernelHooks& h) {
  auto& st = state_;
  while (st.next_interrupt < scenario_->interrupts.size() && scenario_->interrupts[st.next_interrupt].tick <= st.clock) {
    auto index = static_cast<std::size_t>(st.next_interrupt++);
    const auto& irq = scenario_->interrupts[index];
    const auto& decl = scenario_->queues[irq.queue.value];
    auto& qs = st.queues[irq.queue.value];
    auto payload = make_payload(decl.msg_size, interrupt_value(*scenario_, index));
    if (!qs.blocked_receivers.empty()) {
      h.on_interrupt(index, irq.queue, true, *this);
      auto r = qs.blocked_receivers.front();
      qs.blocked_receivers.pop_front();
      qs.sent += 1;
      qs.delivered += 1;
      hand_over(r, irq.queue, payload, Origin::External, ReadyReason::Interrupt, h);
    } else if (qs.pending.size() < decl.capacity) {
      h.on_interrupt(index, irq.queue, true, *this);
      qs.pending.push_back({kInterruptSender, std::move(payload)});
      qs.sent += 1;
    } else {
      h.on_interrupt(index, irq.queue, false, *this);
      qs.dropped += 1;
    }
  }
}

void Kernel::expire_delays() {
  for (std::uint32_t i = 0; i < state_.tasks.size(); ++i) {
    auto& tcb = state_.tasks[i];
    if (tcb.state == TaskState::Delayed && tcb.wake_tick <= state_.clock) {
      complete_blocked(tcb);
      make_ready(TaskId{i}, ReadyReason::DelayExpiry);
    }
  }
}

void Kernel::switch_to(const SwitchRecord& rec, KernelHooks& h, ExecutionResult& out) {
  out.switches.push_back(rec);
  h.on_task_switch(rec, *this);
  state_.running = rec.to;
  if (rec.to) state_.tcb(*rec.to).state = TaskState::Running;
}

bool Kernel::execute(TaskId t, KernelHooks& h, ExecutionResult& out) {
  Services prims(*this, h);
  auto outcome = execute_visit(state_.tcb(t), t, scenario_->tasks[t.value], *scenario_, prims);
  switch (outcome) {
    case VisitOutcome::Executed:
    case VisitOutcome::Halted:
      state_.clock += 1;
      return true;
    case VisitOutcome::Blocked:
      return true;
    case VisitOutcome::Failed:
      state_.clock += 1;
      finish(out, Termination::Failed);
      return false;
  }
  return true;
}

void Kernel::finish(ExecutionResult& out, Termination cause) {
  out.end_tick = state_.clock;
  out.cause = cause;
  out.final_checksums = final_checksums(state_);
}

bool Kernel::step(KernelHooks& h, ExecutionResult& out) {
  auto& st = state_;
  if (st.clock >= scenario_->run_limit) {
    finish(out, Termination::RunLimit);
    return false;
  }
  h.on_boundary(*this);
  // Read the parked call first: an interrupt below may complete it at once.
  std::optional<SwitchRecord> leaving;
  if (st.running) {
    const auto& tcb = st.tcb(*st.running);
    if (tcb.state == TaskState::Halted)
      leaving = SwitchRecord{st.clock, *st.running, std::nullopt, SwitchKind::TaskExit, Primitive::None, 0};
    else if (tcb.state != TaskState::Running)
      leaving = SwitchRecord{st.clock, *st.running, std::nullopt, SwitchKind::BlockingCall, tcb.pending,
                             tcb.pending_object};
  }
  deliver_interrupts(h);
  expire_delays();

  if (st.running) {
    auto cur = *st.running;
    auto& tcb = st.tcb(cur);
    if (leaving) {
      auto rec = *leaving;
      auto next = peek_ready();
      if (next) take_ready(*next);
      rec.to = next;
      switch_to(rec, h, out);
      if (!next) return true;
      st.clock += 1;
      return execute(*next, h, out);
    }
    auto best = peek_ready();
    if (best && priority(*best) < priority(cur)) {
      take_ready(*best);
      tcb.state = TaskState::Ready;
      tcb.ready_reason = ReadyReason::Preempted;
      st.ready.insert(st.ready.begin(), cur);
      switch_to({st.clock, cur, best, SwitchKind::Preemption, Primitive::None, 0}, h, out);
      st.clock += 1;
      return execute(*best, h, out);
    }
    return execute(cur, h, out);
  }

  auto best = peek_ready();
  if (!best) {
    bool all_halted = std::all_of(st.tasks.begin(), st.tasks.end(),
                                  [](const TaskControlBlock& t) { return t.state == TaskState::Halted; });
    if (all_halted) {
      finish(out, Termination::AllHalted);
      return false;
    }
    bool delayed = std::any_of(st.tasks.begin(), st.tasks.end(),
                               [](const TaskControlBlock& t) { return t.state == TaskState::Delayed; });
    if (!delayed && st.next_interrupt >= scenario_->interrupts.size()) {
      finish(out, Termination::Deadlocked);
      return false;
    }
    st.clock += 1;  // idle tick
    return true;
  }
  take_ready(*best);
  SwitchKind kind = SwitchKind::Activation;
  switch (st.tcb(*best).ready_reason) {
    case ReadyReason::Interrupt: kind = SwitchKind::InterruptDispatch; break;
    case ReadyReason::DelayExpiry: kind = SwitchKind::DelayExpiry; break;
    default: break;
  }
  switch_to({st.clock, std::nullopt, best, kind, Primitive::None, 0}, h, out);
  return execute(*best, h, out);
}

std::vector<std::uint32_t> final_checksums(const KernelState& k) {
  std::vector<std::uint32_t> out;
  out.reserve(k.tasks.size());
  for (const auto& t : k.tasks) out.push_back(context_checksum(t.state_bytes, t.loop_stack, t.pc));
  return out;
}

const char* to_string(SwitchKind k) {
  switch (k) {
    case SwitchKind::BlockingCall: return "BlockingCall";
    case SwitchKind::Preemption: return "Preemption";
    case SwitchKind::InterruptDispatch: return "InterruptDispatch";
    case SwitchKind::DelayExpiry: return "DelayExpiry";
    case SwitchKind::Activation: return "Activation";
    case SwitchKind::TaskExit: return "TaskExit";
  }
  return "?";
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::AllHalted: return "AllHalted";
    case Termination::Failed: return "Failed";
    case Termination::RunLimit: return "RunLimit";
    case Termination::Deadlocked: return "Deadlocked";
  }
  return "?";
}

const char* to_string(Origin o) { return o == Origin::External ? "External" : "Internal"; }

}  // namespace dreplay::sim
