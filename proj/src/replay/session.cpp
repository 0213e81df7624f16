#include "dreplay/replay/session.hpp"

#include <algorithm>

#include "dreplay/recorder/checksum.hpp"

namespace dreplay {
namespace {

using sim::ReadyReason;
using sim::TaskState;

struct DivergenceSignal {
  Divergence d;
};

bool is_blocked(TaskState s) {
  return s == TaskState::BlockedOnQueue || s == TaskState::BlockedOnSem || s == TaskState::Delayed;
}

template <typename C, typename T>
void erase_value(C& c, const T& v) {
  auto it = std::find(c.begin(), c.end(), v);
  if (it != c.end()) c.erase(it);
}

}  // namespace

const char* to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Loaded: return "Loaded";
    case SessionStatus::Running: return "Running";
    case SessionStatus::HaltedAtBreakpoint: return "HaltedAtBreakpoint";
    case SessionStatus::Completed: return "Completed";
    case SessionStatus::DivergenceDetected: return "DivergenceDetected";
  }
  return "?";
}

// Replay-side primitives. Blocking outcomes come from the plan, data that
// crossed the replay boundary comes from the injection maps, and internal
// deliveries are cross-checked against the verification log.
class ReplaySession::Prims final : public sim::Primitives {
 public:
  explicit Prims(ReplaySession& s) : s_(s) {}

  bool send(TaskId t, QueueId q, Bytes payload) override {
    auto& qs = s_.state_.queues.at(q.value);
    if (s_.should_block(t, Primitive::Send, q.value)) {
      auto& tcb = s_.state_.tcb(t);
      tcb.state = TaskState::BlockedOnQueue;
      tcb.pending = Primitive::Send;
      tcb.pending_object = q.value;
      tcb.pending_payload = std::move(payload);
      qs.blocked_senders.push_back(t);
      return false;
    }
    if (!qs.blocked_receivers.empty()) {
      auto r = qs.blocked_receivers.front();
      qs.blocked_receivers.pop_front();
      qs.sent += 1;
      qs.delivered += 1;
      if (s_.replayed(r)) check_internal(r, q, payload);
      s_.deliver(r, q, payload);
      return true;
    }
    qs.pending.push_back({static_cast<std::int32_t>(t.value), std::move(payload)});
    qs.sent += 1;
    return true;
  }

  std::optional<Bytes> recv(TaskId t, QueueId q) override {
    auto& st = s_.state_;
    auto& qs = st.queues.at(q.value);
    auto& tcb = st.tcb(t);
    if (s_.should_block(t, Primitive::Recv, q.value)) {
      tcb.state = TaskState::BlockedOnQueue;
      tcb.pending = Primitive::Recv;
      tcb.pending_object = q.value;
      qs.blocked_receivers.push_back(t);
      return std::nullopt;
    }
    const auto& prog = s_.scenario_->tasks[t.value];
    auto slot = sim::receive_slot(tcb, prog, q);
    AccessKey key{t, slot.instance, slot.index};
    Bytes payload;
    auto external = [&](const sim::Message& m) { return s_.is_external_sender(m.sender); };
    if (auto it = s_.plan_->injections.find(key); it != s_.plan_->injections.end()) {
      if (it->second.object != q.value) s_.diverge("injection for receive slot was recorded on another queue");
      // An external message still queued here is the recorded one, or a
      // placeholder left by an unreplayed sender.
      if (auto m = std::find_if(qs.pending.begin(), qs.pending.end(), external); m != qs.pending.end())
        qs.pending.erase(m);
      s_.consumed_messages_.insert(key);
      payload = it->second.bytes;
    } else if (s_.plan_->verification.count(key)) {
      auto m = std::find_if(qs.pending.begin(), qs.pending.end(), [&](const sim::Message& x) { return !external(x); });
      if (m == qs.pending.end()) s_.diverge("recorded internal message is not in the queue");
      payload = m->payload;
      qs.pending.erase(m);
      check_internal(t, q, payload);
    } else {
      s_.diverge("missing injection for receive (instance " + std::to_string(key.instance) + ", index " +
                 std::to_string(key.index) + ")");
    }
    qs.delivered += 1;
    if (!qs.blocked_senders.empty()) {
      auto sender = qs.blocked_senders.front();
      qs.blocked_senders.pop_front();
      auto& stcb = st.tcb(sender);
      qs.pending.push_back({static_cast<std::int32_t>(sender.value), std::move(stcb.pending_payload)});
      qs.sent += 1;
      sim::complete_blocked(stcb);
      s_.make_ready(sender, ReadyReason::TaskEvent);
    }
    return payload;
  }

  bool sem_wait(TaskId t, SemId s) override {
    auto& sem = s_.state_.semaphores.at(s.value);
    if (s_.should_block(t, Primitive::SemWait, s.value)) {
      auto& tcb = s_.state_.tcb(t);
      tcb.state = TaskState::BlockedOnSem;
      tcb.pending = Primitive::SemWait;
      tcb.pending_object = s.value;
      sem.blocked.push_back(t);
      return false;
    }
    // Unreplayed signallers are absent, so the count may lag the reference.
    if (sem.count > 0) sem.count -= 1;
    return true;
  }

  void sem_signal(TaskId, SemId s) override {
    auto& sem = s_.state_.semaphores.at(s.value);
    if (sem.blocked.empty()) {
      sem.count += 1;
      return;
    }
    auto w = sem.blocked.front();
    sem.blocked.pop_front();
    sim::complete_blocked(s_.state_.tcb(w));
    s_.make_ready(w, ReadyReason::TaskEvent);
  }

  void delay(TaskId t, std::uint32_t ticks) override {
    auto& tcb = s_.state_.tcb(t);
    tcb.state = TaskState::Delayed;
    tcb.pending = Primitive::Delay;
    tcb.pending_object = ticks;
    tcb.wake_tick = s_.state_.clock + ticks;
  }

  std::uint8_t read_port(TaskId t, PortId p) override {
    const auto& tcb = s_.state_.tcb(t);
    AccessKey key{t, tcb.instance, tcb.port_index};
    auto it = s_.plan_->port_values.find(key);
    if (it == s_.plan_->port_values.end() || it->second.object != p.value || it->second.bytes.size() != 1)
      s_.diverge("missing injection for port read (instance " + std::to_string(key.instance) + ", index " +
                 std::to_string(key.index) + ")");
    s_.consumed_ports_.insert(key);
    return it->second.bytes[0];
  }

  void activated(TaskId) override {}

 private:
  void check_internal(TaskId r, QueueId q, const Bytes& payload) {
    const auto& tcb = s_.state_.tcb(r);
    auto slot = sim::receive_slot(tcb, s_.scenario_->tasks[r.value], q);
    AccessKey key{r, slot.instance, slot.index};
    auto it = s_.plan_->verification.find(key);
    if (it == s_.plan_->verification.end())
      s_.diverge("task " + std::to_string(r.value) + " received an internal message the reference did not record");
    if (it->second.object != q.value || it->second.bytes != payload)
      s_.diverge("internal message to task " + std::to_string(r.value) + " differs from the verification log");
    s_.verified_.insert(key);
  }

  ReplaySession& s_;
};

ReplaySession::ReplaySession(std::shared_ptr<const ReplayPlan> plan, ReplayOptions options)
    : plan_(std::move(plan)), options_(options) {
  scenario_ = std::make_shared<const sim::Scenario>(plan_->scenario());
  wakeups_by_task_.resize(scenario_->tasks.size());
  for (std::size_t i = 0; i < plan_->wakeups.size(); ++i) {
    auto t = plan_->wakeups[i].task.value;
    if (t >= wakeups_by_task_.size()) throw Error(ErrorCode::TraceFormat, "wakeup record for unknown task");
    wakeups_by_task_[t].push_back(i);
  }
  reload();
}

ReplaySession ReplaySession::load(ReplayPlan plan, ReplayOptions options) {
  return ReplaySession(std::make_shared<const ReplayPlan>(std::move(plan)), options);
}

void ReplaySession::reload() {
  const auto& cp = plan_->start.checkpoint;
  try {
    state_ = sim::decode_state(*scenario_, cp.kernel);
  } catch (const Error& e) {
    throw Error(ErrorCode::ChecksumMismatch, std::string("start checkpoint does not decode: ") + e.what());
  }
  if (cp.task_checksums.size() != state_.tasks.size())
    throw Error(ErrorCode::ChecksumMismatch, "start checkpoint task count differs");
  for (std::size_t i = 0; i < state_.tasks.size(); ++i) {
    const auto& t = state_.tasks[i];
    if (context_checksum(t.state_bytes, t.loop_stack, t.pc) != cp.task_checksums[i])
      throw Error(ErrorCode::ChecksumMismatch, "restored context of task " + std::to_string(i) +
                                                   " disagrees with the start checkpoint");
  }
  if (state_.clock != plan_->start.t_start)
    throw Error(ErrorCode::ChecksumMismatch, "start checkpoint clock differs from t_start");
  status_ = SessionStatus::Loaded;
  cursor_ = 0;
  phase_ = Phase::Top;
  visit_task_ = {};
  visits_executed_ = 0;
  performed_.clear();
  consumed_messages_.clear();
  consumed_ports_.clear();
  verified_.clear();
  next_wakeup_.assign(scenario_->tasks.size(), 0);
  parked_.reset();
  if (state_.running) {
    const auto& r = state_.tcb(*state_.running);
    if (is_blocked(r.state)) parked_ = Parked{*state_.running, r.pending, r.pending_object, marker_of(*state_.running, r)};
  }
  consumed_wakeups_ = 0;
  divergence_.reset();
  halted_at_.reset();
  suppressed_.reset();
  for (auto& b : breakpoints_) b.fired = false;
}

bool ReplaySession::is_external_sender(std::int32_t sender) const {
  return sender == sim::kInterruptSender || !scenario_->tasks.at(static_cast<std::size_t>(sender)).replayed;
}

const ControlFlowEvent* ReplaySession::next_forced() const {
  return cursor_ < plan_->forced.size() ? &plan_->forced[cursor_] : nullptr;
}

void ReplaySession::diverge(std::string reason, std::optional<Marker> observed) const {
  Divergence d;
  d.tick = state_.clock;
  d.cursor = cursor_;
  d.reason = std::move(reason);
  if (auto* n = next_forced()) d.expected = *n;
  d.observed = observed;
  throw DivergenceSignal{std::move(d)};
}

void ReplaySession::make_ready(TaskId t, ReadyReason reason) {
  auto& tcb = state_.tcb(t);
  tcb.state = TaskState::Ready;
  tcb.ready_reason = reason;
  state_.ready.push_back(t);
}

void ReplaySession::deliver(TaskId r, QueueId q, const Bytes& payload) {
  // An unreplayed receiver only leaves the wait list.
  if (replayed(r)) sim::deliver_message(state_.tcb(r), scenario_->tasks[r.value], q, payload);
  make_ready(r, ReadyReason::TaskEvent);
}

bool ReplaySession::marker_matches(TaskId t, const Marker& m) const {
  return same_marker(marker_of(t, state_.tcb(t)), m);
}

bool ReplaySession::same_marker(const Marker& cur, const Marker& m) const {
  if (cur.pc != m.pc || cur.instance != m.instance || cur.checksum != m.checksum) return false;
  return !options_.match_occurrence || cur.occurrence == m.occurrence;
}

bool ReplaySession::should_block(TaskId t, Primitive prim, std::uint32_t object) const {
  // A visit at or past t_fail cannot have consumed a tick in the reference.
  if (state_.clock >= plan_->t_fail) return true;
  const auto* n = next_forced();
  if (!n || n->kind != SwitchKind::BlockingCall || n->from != t || n->primitive != prim || n->object != object ||
      !n->marker)
    return false;
  const auto& tcb = state_.tcb(t);
  if (n->marker->pc != tcb.pc || n->marker->instance != tcb.instance) return false;
  return !options_.match_occurrence || n->marker->occurrence == tcb.visits.at(tcb.pc);
}

void ReplaySession::complete_external_receives() {
  for (std::uint32_t i = 0; i < state_.tasks.size(); ++i) {
    TaskId t{i};
    auto& tcb = state_.tasks[i];
    if (!replayed(t) || tcb.state != TaskState::BlockedOnQueue || tcb.pending != Primitive::Recv) continue;
    QueueId q{tcb.pending_object};
    auto slot = sim::receive_slot(tcb, scenario_->tasks[i], q);
    AccessKey key{t, slot.instance, slot.index};
    auto it = plan_->injections.find(key);
    if (it == plan_->injections.end() || it->second.tick > state_.clock || consumed_messages_.count(key)) continue;
    auto& qs = state_.queues.at(q.value);
    erase_value(qs.blocked_receivers, t);
    qs.delivered += 1;
    consumed_messages_.insert(key);
    sim::deliver_message(tcb, scenario_->tasks[i], q, it->second.bytes);
    make_ready(t, ReadyReason::Interrupt);
  }
}

// Completions the reference performed from outside the replayed set.
void ReplaySession::apply_wakeups() {
  for (std::uint32_t i = 0; i < state_.tasks.size(); ++i) {
    TaskId t{i};
    auto& tcb = state_.tasks[i];
    const auto& list = wakeups_by_task_[i];
    while (next_wakeup_[i] < list.size()) {
      const auto& w = plan_->wakeups[list[next_wakeup_[i]]];
      if (w.tick > state_.clock) break;
      auto prim = w.bytes.empty() ? Primitive::None : static_cast<Primitive>(w.bytes[0]);
      bool parked = (prim == Primitive::Send && tcb.state == TaskState::BlockedOnQueue) ||
                    (prim == Primitive::SemWait && tcb.state == TaskState::BlockedOnSem);
      if (!parked || tcb.pending != prim || tcb.pending_object != w.object || tcb.pc != w.index ||
          tcb.instance != w.instance)
        diverge("task " + std::to_string(i) + " is not parked where the recorded wakeup found it");
      if (prim == Primitive::Send) {
        auto& qs = state_.queues.at(w.object);
        erase_value(qs.blocked_senders, t);
        qs.pending.push_back({static_cast<std::int32_t>(i), std::move(tcb.pending_payload)});
        qs.sent += 1;
      } else {
        erase_value(state_.semaphores.at(w.object).blocked, t);
      }
      sim::complete_blocked(tcb);
      make_ready(t, ReadyReason::TaskEvent);
      next_wakeup_[i] += 1;
      consumed_wakeups_ += 1;
    }
  }
}

// An unreplayed task parked itself; keep the wait lists shaped like the
// reference so replayed wakers pick the same partner.
void ReplaySession::mirror_block(TaskId t, const ControlFlowEvent& ev) {
  auto add = [&](auto& list) {
    if (std::find(list.begin(), list.end(), t) == list.end()) list.push_back(t);
  };
  switch (ev.primitive) {
    case Primitive::Send:
      if (ev.object < state_.queues.size()) add(state_.queues[ev.object].blocked_senders);
      break;
    case Primitive::Recv:
      if (ev.object < state_.queues.size()) add(state_.queues[ev.object].blocked_receivers);
      break;
    case Primitive::SemWait:
      if (ev.object < state_.semaphores.size()) add(state_.semaphores[ev.object].blocked);
      break;
    default: break;
  }
}

void ReplaySession::expire_delays() {
  for (std::uint32_t i = 0; i < state_.tasks.size(); ++i) {
    auto& tcb = state_.tasks[i];
    if (replayed(TaskId{i}) && tcb.state == TaskState::Delayed && tcb.wake_tick <= state_.clock) {
      sim::complete_blocked(tcb);
      make_ready(TaskId{i}, ReadyReason::DelayExpiry);
    }
  }
}

void ReplaySession::make_runnable(TaskId t) {
  auto name = "task " + std::to_string(t.value);
  switch (state_.tcb(t).state) {
    case TaskState::Ready:
    case TaskState::Running: return;
    case TaskState::BlockedOnQueue:
    case TaskState::BlockedOnSem: diverge(name + " is dispatched while still parked");
    case TaskState::Delayed: diverge(name + " is dispatched before its delay expired");
    case TaskState::Halted:
    case TaskState::Failed: diverge(name + " is dispatched after it terminated");
  }
}

std::optional<std::uint32_t> ReplaySession::breakpoint_hit(BreakpointSpec::Kind kind,
                                                           const std::function<bool(Breakpoint&)>& pred) {
  auto pos = position();
  for (auto& b : breakpoints_) {
    if (!b.enabled || b.spec.kind != kind) continue;
    if (suppressed_ && suppressed_->first == b.id && suppressed_->second == pos) continue;
    if (pred(b)) return b.id;
  }
  return std::nullopt;
}

void ReplaySession::halt(std::uint32_t id) {
  status_ = SessionStatus::HaltedAtBreakpoint;
  halted_at_ = id;
  suppressed_ = {id, position()};
  auto it = std::find_if(breakpoints_.begin(), breakpoints_.end(), [&](const Breakpoint& b) { return b.id == id; });
  if (it != breakpoints_.end()) {
    if (it->spec.kind == BreakpointSpec::Kind::AtTick) it->fired = true;
    if (it->one_shot) breakpoints_.erase(it);
  }
}

void ReplaySession::complete() {
  status_ = SessionStatus::Completed;
  halted_at_.reset();
  std::erase_if(breakpoints_, [](const Breakpoint& b) { return b.one_shot; });
}

bool ReplaySession::perform(const ControlFlowEvent& ev) {
  if (auto id = breakpoint_hit(BreakpointSpec::Kind::AtEvent, [&](Breakpoint& b) { return b.spec.seq == ev.seq; })) {
    halt(*id);
    return false;
  }
  if (ev.tick != state_.clock) diverge("forced switch is due at another tick");
  if (ev.from && replayed(*ev.from)) {
    auto f = *ev.from;
    const auto& tcb = state_.tcb(f);
    auto observed = marker_of(f, tcb);
    bool state_ok = false;
    switch (ev.kind) {
      case SwitchKind::Preemption: state_ok = tcb.state == TaskState::Running; break;
      case SwitchKind::BlockingCall:
        // Ready here means the call was completed at this same scheduling point.
        state_ok = (is_blocked(tcb.state) || tcb.state == TaskState::Ready) && parked_ && parked_->task == f &&
                   parked_->prim == ev.primitive && parked_->object == ev.object;
        break;
      case SwitchKind::TaskExit: state_ok = tcb.state == TaskState::Halted; break;
      default: break;
    }
    if (!state_ok) diverge("outgoing task is not in the state the forced switch requires", observed);
    if (ev.kind == SwitchKind::BlockingCall) observed = parked_->marker;
    if (!ev.marker || !same_marker(observed, *ev.marker)) diverge("marker mismatch at forced switch", observed);
  }
  if (ev.from) {
    auto f = *ev.from;
    auto& tcb = state_.tcb(f);
    if (ev.kind == SwitchKind::Preemption) {
      tcb.state = TaskState::Ready;
      tcb.ready_reason = ReadyReason::Preempted;
      state_.ready.insert(state_.ready.begin(), f);
    } else if (!replayed(f)) {
      // Unreplayed tasks do not execute; only their scheduling state follows the plan.
      tcb.state = ev.kind == SwitchKind::TaskExit ? TaskState::Halted
                  : ev.primitive == Primitive::SemWait ? TaskState::BlockedOnSem
                  : ev.primitive == Primitive::Delay   ? TaskState::Delayed
                                                       : TaskState::BlockedOnQueue;
      if (ev.kind == SwitchKind::BlockingCall) mirror_block(f, ev);
    }
  }
  if (ev.to) {
    auto t = *ev.to;
    erase_value(state_.ready, t);
    if (replayed(t)) {
      make_runnable(t);
    } else {
      for (auto& q : state_.queues) {
        erase_value(q.blocked_senders, t);
        erase_value(q.blocked_receivers, t);
      }
      for (auto& s : state_.semaphores) erase_value(s.blocked, t);
    }
    state_.tcb(t).state = TaskState::Running;
  }
  state_.running = ev.to;
  performed_.push_back(ev.as_switch());
  cursor_ += 1;
  if (on_switch) on_switch(ev);
  if (ev.to) {
    if (ev.from) state_.clock += 1;
    phase_ = Phase::Visit;
    visit_task_ = *ev.to;
  }
  return true;
}

// One scheduling point. Returns false when the session stopped here.
bool ReplaySession::top() {
  // Recorded completions may land late, but on RunLimit and Failed the
  // reference expires no delays at t_fail.
  complete_external_receives();
  apply_wakeups();
  if (state_.clock < plan_->t_fail ||
      (plan_->cause != sim::Termination::RunLimit && plan_->cause != sim::Termination::Failed))
    expire_delays();
  const auto* next = next_forced();
  const auto clock = state_.clock;
  if (next && next->tick < clock) diverge("forced switch was not reached in time");
  bool due = next && next->tick == clock;
  auto finish_or_diverge = [&] {
    if (next) diverge("reached t_fail with forced switches left");
    complete();
    return false;
  };

  if (state_.running) {
    auto cur = *state_.running;
    if (!replayed(cur)) {
      if (due && next->from == cur) return perform(*next);
      if (next && next->from != cur) diverge("forced switch is not from the running unreplayed task");
      if (clock >= plan_->t_fail) return finish_or_diverge();
      state_.clock += 1;
      return true;
    }
    const auto& tcb = state_.tcb(cur);
    if (tcb.state != TaskState::Running) {
      if (due && next->from == cur) return perform(*next);
      if (!next && clock >= plan_->t_fail) return finish_or_diverge();
      diverge("task left the CPU where the plan has no switch", marker_of(cur, tcb));
    }
    if (next && next->from == cur && next->kind == SwitchKind::Preemption && next->marker &&
        marker_matches(cur, *next->marker)) {
      if (!due) diverge("preemption marker reached at a different tick", marker_of(cur, tcb));
      return perform(*next);
    }
    if (due && next->from == cur && next->kind == SwitchKind::Preemption && next->marker) {
      auto observed = marker_of(cur, tcb);
      if (observed.pc == next->marker->pc && observed.occurrence == next->marker->occurrence &&
          observed.instance == next->marker->instance)
        diverge("context checksum differs at the preemption point", observed);
    }
    if (clock >= plan_->t_fail && !due) return finish_or_diverge();
    phase_ = Phase::Visit;
    visit_task_ = cur;
    return true;
  }

  if (due) {
    if (next->from) diverge("forced switch leaves a task but the CPU is idle");
    return perform(*next);
  }
  if (clock >= plan_->t_fail) return finish_or_diverge();
  state_.clock += 1;
  return true;
}

void ReplaySession::visit(TaskId t) {
  Prims prims(*this);
  auto& tcb = state_.tcb(t);
  auto outcome = sim::execute_visit(tcb, t, scenario_->tasks[t.value], *scenario_, prims);
  if (outcome != sim::VisitOutcome::Blocked) state_.clock += 1;
  else parked_ = Parked{t, tcb.pending, tcb.pending_object, marker_of(t, tcb)};
  visits_executed_ += 1;
}

// An unreplayed task's visit: it took a tick unless the plan has it park here.
void ReplaySession::opaque_visit(TaskId t) {
  if (state_.clock >= plan_->t_fail) return;
  const auto* n = next_forced();
  if (n && n->tick == state_.clock && n->from == t && n->kind == SwitchKind::BlockingCall) return;
  state_.clock += 1;
}

SessionStatus ReplaySession::advance(bool single_step) {
  if (status_ != SessionStatus::Loaded && status_ != SessionStatus::HaltedAtBreakpoint)
    throw Error(ErrorCode::InvalidState, std::string("session is ") + to_string(status_));
  status_ = SessionStatus::Running;
  halted_at_.reset();
  try {
    while (true) {
      if (phase_ == Phase::Top) {
        if (state_.clock < plan_->t_fail) {
          auto id = breakpoint_hit(BreakpointSpec::Kind::AtTick,
                                   [&](Breakpoint& b) { return !b.fired && state_.clock >= b.spec.tick; });
          if (id) {
            halt(*id);
            return status_;
          }
        }
        if (!top()) return status_;
        continue;
      }
      if (!replayed(visit_task_)) {
        opaque_visit(visit_task_);
        phase_ = Phase::Top;
        continue;
      }
      const auto& tcb = state_.tcb(visit_task_);
      auto id = breakpoint_hit(BreakpointSpec::Kind::AtMarker, [&](Breakpoint& b) {
        return b.spec.task == visit_task_ && b.spec.pc == tcb.pc && b.spec.instance == tcb.instance &&
               b.spec.occurrence == tcb.visits.at(tcb.pc);
      });
      if (id) {
        halt(*id);
        return status_;
      }
      visit(visit_task_);
      phase_ = Phase::Top;
      if (single_step) {
        status_ = SessionStatus::HaltedAtBreakpoint;
        suppressed_.reset();
        return status_;
      }
    }
  } catch (DivergenceSignal& sig) {
    divergence_ = std::move(sig.d);
    status_ = SessionStatus::DivergenceDetected;
    std::erase_if(breakpoints_, [](const Breakpoint& b) { return b.one_shot; });
  }
  return status_;
}

SessionStatus ReplaySession::resume() { return advance(false); }

SessionStatus ReplaySession::step() { return advance(true); }

void ReplaySession::check_range(const BreakpointSpec& spec) const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::BreakpointOutOfRange, m); };
  switch (spec.kind) {
    case BreakpointSpec::Kind::AtTick:
      if (spec.tick < t_start() || spec.tick > t_fail())
        bad("tick " + std::to_string(spec.tick) + " outside [" + std::to_string(t_start()) + ", " +
            std::to_string(t_fail()) + "]");
      break;
    case BreakpointSpec::Kind::AtMarker:
      if (spec.task.value >= scenario_->tasks.size()) bad("no such task");
      if (spec.pc > scenario_->tasks[spec.task.value].end_pc()) bad("pc outside the task body");
      break;
    case BreakpointSpec::Kind::AtEvent:
      if (plan_->forced.empty() || spec.seq < plan_->forced.front().seq || spec.seq > plan_->forced.back().seq)
        bad("event seq " + std::to_string(spec.seq) + " is not in the replay window");
      break;
  }
}

std::uint32_t ReplaySession::add_breakpoint(const BreakpointSpec& spec) {
  check_range(spec);
  Breakpoint b;
  b.id = next_breakpoint_id_++;
  b.spec = spec;
  breakpoints_.push_back(b);
  return b.id;
}

bool ReplaySession::remove_breakpoint(std::uint32_t id) {
  return std::erase_if(breakpoints_, [&](const Breakpoint& b) { return b.id == id; }) > 0;
}

SessionStatus ReplaySession::run_to(const BreakpointSpec& spec) {
  check_range(spec);
  if (status_ == SessionStatus::Running) throw Error(ErrorCode::InvalidState, "session is running");
  bool backward = spec.kind == BreakpointSpec::Kind::AtTick && spec.tick < state_.clock;
  if (backward || status_ == SessionStatus::Completed || status_ == SessionStatus::DivergenceDetected) reload();
  add_breakpoint(spec);
  breakpoints_.back().one_shot = true;
  return resume();
}

TaskView ReplaySession::inspect(TaskId task) const {
  if (task.value >= state_.tasks.size()) throw Error(ErrorCode::InvalidState, "no such task");
  if (!replayed(task)) throw Error(ErrorCode::InvalidState, "task " + scenario_->tasks[task.value].name + " is not replayed");
  const auto& tcb = state_.tcb(task);
  TaskView v;
  v.task = task;
  v.name = scenario_->tasks[task.value].name;
  v.replayed = replayed(task);
  v.state = tcb.state;
  v.pc = tcb.pc;
  v.occurrence = tcb.visits.at(tcb.pc);
  v.instance = tcb.instance;
  v.state_bytes = tcb.state_bytes;
  v.loop_stack = tcb.loop_stack;
  v.checksum = context_checksum(tcb.state_bytes, tcb.loop_stack, tcb.pc);
  for (const auto& [k, r] : plan_->injections)
    if (k.task == task && !consumed_messages_.count(k)) v.pending_messages.push_back(k);
  for (const auto& [k, r] : plan_->port_values)
    if (k.task == task && !consumed_ports_.count(k)) v.pending_ports.push_back(k);
  return v;
}

Bytes ReplaySession::serialize_state() const {
  ByteWriter w;
  w.blob(sim::encode_state(state_));
  w.u64(cursor_);
  w.u8(static_cast<std::uint8_t>(phase_));
  w.u32(visit_task_.value);
  auto keys = [&](const std::set<AccessKey>& s) {
    w.u32(static_cast<std::uint32_t>(s.size()));
    for (const auto& k : s) {
      w.u32(k.task.value);
      w.u64(k.instance);
      w.u32(k.index);
    }
  };
  keys(consumed_messages_);
  keys(consumed_ports_);
  keys(verified_);
  w.u32(static_cast<std::uint32_t>(next_wakeup_.size()));
  for (auto n : next_wakeup_) w.u64(n);
  w.boolean(parked_.has_value());
  if (parked_) {
    w.u32(parked_->task.value);
    w.u8(static_cast<std::uint8_t>(parked_->prim));
    w.u32(parked_->object);
    encode(w, parked_->marker);
  }
  return std::move(w).take();
}

}  // namespace dreplay
