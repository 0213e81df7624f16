#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "dreplay/recorder/records.hpp"
#include "dreplay/recorder/ring_buffer.hpp"
#include "dreplay/sim/kernel.hpp"
#include "dreplay/sim/scenario.hpp"

namespace dreplay {

enum class ProbeKind : std::uint8_t {
  TaskSwitch,
  BlockingCall,
  MessageIn,
  PeripheralIn,
  StateSnapshot,
  Checkpoint,
  Wakeup,
};
inline constexpr std::size_t kProbeKinds = 7;

const char* to_string(ProbeKind k);
bool is_data_probe(ProbeKind k);

/// Deterministic stand-in for probe execution time. Control-flow probes
/// cost their base; data and checkpoint probes add one tick per
/// `bytes_per_tick` bytes logged.
struct CostModel {
  std::array<std::uint32_t, kProbeKinds> base_ticks{1, 1, 1, 1, 1, 1, 1};
  std::uint32_t bytes_per_tick = 64;

  std::uint64_t ticks(ProbeKind kind, std::size_t bytes) const;

  friend bool operator==(const CostModel&, const CostModel&) = default;
};

struct RecorderConfig {
  std::vector<std::size_t> data_capacity;  // per task
  std::size_t control_capacity = 4096;
  std::size_t checkpoint_capacity = 4;
  Tick checkpoint_period = 500;
  std::vector<std::vector<std::uint32_t>> filters;  // per task: init-only vars left out of snapshots
  CostModel cost;

  /// Capacities for every task, filters from the scenario's init-only vars.
  static RecorderConfig defaults_for(const sim::Scenario& s, std::size_t data_capacity = 1024);

  /// Throws Error(InvariantViolation).
  void validate(const sim::Scenario& s) const;

  friend bool operator==(const RecorderConfig&, const RecorderConfig&) = default;
};

struct ProbeCounter {
  std::uint64_t invocations = 0;
  std::uint64_t bytes = 0;
  std::uint64_t ticks = 0;

  friend bool operator==(const ProbeCounter&, const ProbeCounter&) = default;
};

inline constexpr std::int32_t kSystemTask = -1;

struct ProbeStats {
  std::map<std::pair<ProbeKind, std::int32_t>, ProbeCounter> by_task;  // task kSystemTask for checkpoints
  std::map<std::uint32_t, ProbeCounter> by_queue;                      // MessageIn probes per queue

  void add(ProbeKind kind, std::int32_t task, std::uint64_t bytes, std::uint64_t ticks);
  std::uint64_t total_bytes() const;
  std::uint64_t total_ticks() const;

  friend bool operator==(const ProbeStats&, const ProbeStats&) = default;
};

struct Trace;

/// The TaskSwitchHook plus the blocking-call, message, peripheral and
/// activation probes. Everything is logged into fixed-size rings; probe
/// cost goes to ProbeStats and never advances logical time.
class Recorder final : public sim::KernelHooks {
 public:
  Recorder(const sim::Scenario& scenario, RecorderConfig config);

  void on_boundary(const sim::Kernel& k) override;
  void on_task_switch(const sim::SwitchRecord& rec, const sim::Kernel& k) override;
  void on_blocking_call(TaskId task, Primitive prim, std::uint32_t object, const sim::Kernel& k) override;
  void on_msg_received(TaskId task, sim::ReceiveSlot slot, QueueId queue, const Bytes& payload, Origin origin,
                       const sim::Kernel& k) override;
  void on_peripheral_read(TaskId task, PortId port, std::uint8_t value, const sim::Kernel& k) override;
  void on_activation(TaskId task, const sim::Kernel& k) override;
  void on_unblocked(TaskId task, Primitive prim, std::uint32_t object, TaskId by, const sim::Kernel& k) override;

  const RingBuffer<ControlFlowEvent>& control() const { return control_; }
  const RingBuffer<DataFlowRecord>& data(TaskId t) const { return data_.at(t.value); }
  const RingBuffer<CheckpointRecord>& checkpoints() const { return checkpoints_; }
  const ProbeStats& stats() const { return stats_; }
  const RecorderConfig& config() const { return config_; }

  /// Packages rings, stats and the run outcome.
  Trace finish(const sim::ExecutionResult& result) const;

 private:
  void log_data(DataFlowRecord rec, ProbeKind kind);

  const sim::Scenario* scenario_;
  RecorderConfig config_;
  RingBuffer<ControlFlowEvent> control_;
  std::vector<RingBuffer<DataFlowRecord>> data_;
  RingBuffer<CheckpointRecord> checkpoints_;
  ProbeStats stats_;
  std::uint64_t next_seq_ = 0;
  // Context at the most recent primitive call; a parked task's marker.
  std::optional<std::pair<TaskId, Marker>> last_call_;
  std::optional<Tick> next_checkpoint_;
};

/// Runs the scenario with a Recorder attached.
Trace record(const sim::Scenario& scenario, const RecorderConfig& config);

}  // namespace dreplay
