#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dreplay/historian/plan.hpp"
#include "dreplay/recorder/trace.hpp"
#include "dreplay/sim/kernel.hpp"

namespace dreplay {

enum class SessionStatus : std::uint8_t { Loaded, Running, HaltedAtBreakpoint, Completed, DivergenceDetected };
const char* to_string(SessionStatus s);

struct ReplayOptions {
  /// Off only in tests: match markers on (pc, checksum) alone.
  bool match_occurrence = true;
};

struct BreakpointSpec {
  enum class Kind : std::uint8_t { AtTick, AtMarker, AtEvent };
  Kind kind = Kind::AtTick;
  Tick tick = 0;                // AtTick
  TaskId task;                  // AtMarker
  std::uint32_t pc = 0;         // AtMarker
  std::uint32_t occurrence = 0; // AtMarker: visits of pc already made in the instance
  std::uint64_t instance = 0;   // AtMarker
  std::uint64_t seq = 0;        // AtEvent: halt before this forced switch

  static BreakpointSpec at_tick(Tick t) { return {Kind::AtTick, t, {}, 0, 0, 0, 0}; }
  static BreakpointSpec at_marker(TaskId task, std::uint32_t pc, std::uint32_t occurrence, std::uint64_t instance) {
    return {Kind::AtMarker, 0, task, pc, occurrence, instance, 0};
  }
  static BreakpointSpec at_event(std::uint64_t seq) { return {Kind::AtEvent, 0, {}, 0, 0, 0, seq}; }

  friend bool operator==(const BreakpointSpec&, const BreakpointSpec&) = default;
};

struct Breakpoint {
  std::uint32_t id = 0;
  BreakpointSpec spec;
  bool enabled = true;
  bool one_shot = false;
  bool fired = false;  // AtTick only: already passed
};

struct Divergence {
  Tick tick = 0;
  std::size_t cursor = 0;
  std::string reason;
  std::optional<ControlFlowEvent> expected;
  std::optional<Marker> observed;
};

struct TaskView {
  TaskId task;
  std::string name;
  bool replayed = true;
  sim::TaskState state = sim::TaskState::Ready;
  std::uint32_t pc = 0;
  std::uint32_t occurrence = 0;
  std::uint64_t instance = 0;
  Bytes state_bytes;
  std::vector<std::uint32_t> loop_stack;
  std::uint32_t checksum = 0;
  std::vector<AccessKey> pending_messages;  // injections not yet consumed
  std::vector<AccessKey> pending_ports;
};

/// One deterministic re-execution of a plan. The session owns its
/// simulator; calls must not overlap.
class ReplaySession {
 public:
  /// Throws Error(ChecksumMismatch) if the start checkpoint does not restore
  /// to the recorded task contexts.
  static ReplaySession load(ReplayPlan plan, ReplayOptions options = {});

  SessionStatus resume();
  /// Executes exactly one statement visit.
  SessionStatus step();
  /// One-shot breakpoint plus resume. An earlier tick reloads and re-runs.
  SessionStatus run_to(const BreakpointSpec& spec);

  std::uint32_t add_breakpoint(const BreakpointSpec& spec);
  bool remove_breakpoint(std::uint32_t id);
  const std::vector<Breakpoint>& breakpoints() const { return breakpoints_; }

  TaskView inspect(TaskId task) const;
  /// Kernel state plus replay position; equal bytes mean equal sessions.
  Bytes serialize_state() const;

  SessionStatus status() const { return status_; }
  Tick clock() const { return state_.clock; }
  Tick t_start() const { return plan_->start.t_start; }
  Tick t_fail() const { return plan_->t_fail; }
  std::size_t cursor() const { return cursor_; }
  const ReplayPlan& plan() const { return *plan_; }
  const sim::Scenario& scenario() const { return *scenario_; }
  const sim::KernelState& state() const { return state_; }
  const std::vector<sim::SwitchRecord>& performed() const { return performed_; }
  const std::optional<Divergence>& divergence() const { return divergence_; }
  std::optional<std::uint32_t> halted_at() const { return halted_at_; }
  std::size_t verified_count() const { return verified_.size(); }
  std::size_t consumed_injections() const { return consumed_messages_.size(); }
  std::size_t consumed_ports() const { return consumed_ports_.size(); }
  std::size_t consumed_wakeups() const { return consumed_wakeups_; }

  /// Fired after each forced switch is performed.
  std::function<void(const ControlFlowEvent&)> on_switch;

 private:
  class Prims;
  friend class Prims;
  enum class Phase : std::uint8_t { Top, Visit };
  struct Position {
    std::uint64_t visits = 0;
    std::size_t cursor = 0;
    Tick clock = 0;
    Phase phase = Phase::Top;
    friend bool operator==(const Position&, const Position&) = default;
  };

  ReplaySession(std::shared_ptr<const ReplayPlan> plan, ReplayOptions options);
  void reload();
  SessionStatus advance(bool single_step);
  bool top();
  bool perform(const ControlFlowEvent& ev);
  void visit(TaskId t);
  void opaque_visit(TaskId t);
  void complete_external_receives();
  void apply_wakeups();
  void mirror_block(TaskId t, const ControlFlowEvent& ev);
  void expire_delays();
  void make_runnable(TaskId t);
  void make_ready(TaskId t, sim::ReadyReason reason);
  void deliver(TaskId r, QueueId q, const Bytes& payload);
  bool is_external_sender(std::int32_t sender) const;
  bool marker_matches(TaskId t, const Marker& m) const;
  bool same_marker(const Marker& observed, const Marker& expected) const;
  bool should_block(TaskId t, Primitive prim, std::uint32_t object) const;
  bool replayed(TaskId t) const { return scenario_->tasks[t.value].replayed; }
  const ControlFlowEvent* next_forced() const;
  std::optional<std::uint32_t> breakpoint_hit(BreakpointSpec::Kind kind, const std::function<bool(Breakpoint&)>& pred);
  void halt(std::uint32_t id);
  void complete();
  [[noreturn]] void diverge(std::string reason, std::optional<Marker> observed = std::nullopt) const;
  void check_range(const BreakpointSpec& spec) const;
  Position position() const { return {visits_executed_, cursor_, state_.clock, phase_}; }

  std::shared_ptr<const ReplayPlan> plan_;
  std::shared_ptr<const sim::Scenario> scenario_;
  ReplayOptions options_;
  sim::KernelState state_;
  SessionStatus status_ = SessionStatus::Loaded;
  std::size_t cursor_ = 0;
  Phase phase_ = Phase::Top;
  TaskId visit_task_;
  std::uint64_t visits_executed_ = 0;
  std::vector<sim::SwitchRecord> performed_;
  std::set<AccessKey> consumed_messages_;
  std::set<AccessKey> consumed_ports_;
  std::set<AccessKey> verified_;
  std::vector<std::vector<std::size_t>> wakeups_by_task_;  // indices into plan wakeups
  std::vector<std::size_t> next_wakeup_;
  std::size_t consumed_wakeups_ = 0;
  // The call the running task parked on during its last visit.
  struct Parked {
    TaskId task;
    Primitive prim;
    std::uint32_t object;
    Marker marker;
  };
  std::optional<Parked> parked_;
  std::optional<Divergence> divergence_;
  std::vector<Breakpoint> breakpoints_;
  std::uint32_t next_breakpoint_id_ = 1;
  std::optional<std::uint32_t> halted_at_;
  std::optional<std::pair<std::uint32_t, Position>> suppressed_;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct DeterminismReport {
  SessionStatus status = SessionStatus::Loaded;
  std::vector<CheckResult> checks;
  std::optional<Divergence> divergence;

  bool passed() const;
  nlohmann::json to_json() const;
  std::string summary() const;
};

DeterminismReport verify(const ReplaySession& s);
/// Loads, runs to the end and verifies.
DeterminismReport replay_and_verify(const ReplayPlan& plan, ReplayOptions options = {});

}  // namespace dreplay
