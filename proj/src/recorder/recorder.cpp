#include "dreplay/recorder/recorder.hpp"

#include <algorithm>

#include "dreplay/recorder/checksum.hpp"
#include "dreplay/recorder/trace.hpp"

namespace dreplay {

const char* to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::TaskSwitch: return "task_switch";
    case ProbeKind::BlockingCall: return "blocking_call";
    case ProbeKind::MessageIn: return "message_in";
    case ProbeKind::PeripheralIn: return "peripheral_in";
    case ProbeKind::StateSnapshot: return "state_snapshot";
    case ProbeKind::Checkpoint: return "kernel_checkpoint";
    case ProbeKind::Wakeup: return "wakeup";
  }
  return "?";
}

bool is_data_probe(ProbeKind k) {
  return k == ProbeKind::MessageIn || k == ProbeKind::PeripheralIn || k == ProbeKind::StateSnapshot ||
         k == ProbeKind::Wakeup;
}

std::uint64_t CostModel::ticks(ProbeKind kind, std::size_t bytes) const {
  std::uint64_t t = base_ticks[static_cast<std::size_t>(kind)];
  if ((is_data_probe(kind) || kind == ProbeKind::Checkpoint) && bytes_per_tick > 0) t += bytes / bytes_per_tick;
  return t;
}

RecorderConfig RecorderConfig::defaults_for(const sim::Scenario& s, std::size_t data_capacity) {
  RecorderConfig c;
  c.data_capacity.assign(s.tasks.size(), data_capacity);
  for (const auto& t : s.tasks) c.filters.push_back(t.init_only_vars);
  return c;
}

void RecorderConfig::validate(const sim::Scenario& s) const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::InvariantViolation, m); };
  if (data_capacity.size() != s.tasks.size()) bad("data capacity list does not match task count");
  if (filters.size() != s.tasks.size()) bad("filter list does not match task count");
  for (auto c : data_capacity)
    if (c < 1) bad("data capacity must be >= 1");
  if (control_capacity < 1) bad("control capacity must be >= 1");
  if (checkpoint_capacity < 2) bad("checkpoint capacity must be >= 2");
  if (checkpoint_period < 1) bad("checkpoint period must be >= 1");
  for (std::size_t i = 0; i < filters.size(); ++i)
    for (auto v : filters[i])
      if (v >= s.tasks[i].state_size) bad("filter var outside task state");
}

void ProbeStats::add(ProbeKind kind, std::int32_t task, std::uint64_t bytes, std::uint64_t ticks) {
  auto& c = by_task[{kind, task}];
  c.invocations += 1;
  c.bytes += bytes;
  c.ticks += ticks;
}

std::uint64_t ProbeStats::total_bytes() const {
  std::uint64_t n = 0;
  for (const auto& [k, c] : by_task) n += c.bytes;
  return n;
}

std::uint64_t ProbeStats::total_ticks() const {
  std::uint64_t n = 0;
  for (const auto& [k, c] : by_task) n += c.ticks;
  return n;
}

Recorder::Recorder(const sim::Scenario& scenario, RecorderConfig config)
    : scenario_(&scenario),
      config_(std::move(config)),
      control_(config_.control_capacity),
      checkpoints_(config_.checkpoint_capacity) {
  config_.validate(scenario);
  for (auto c : config_.data_capacity) data_.emplace_back(c);
}

void Recorder::on_boundary(const sim::Kernel& k) {
  auto clock = k.clock();
  if (next_checkpoint_ && clock < *next_checkpoint_) return;
  CheckpointRecord c;
  c.tick = clock;
  c.kernel = k.checkpoint();
  for (const auto& t : k.state().tasks) {
    c.task_checksums.push_back(context_checksum(t.state_bytes, t.loop_stack, t.pc));
    c.task_instances.push_back(t.instance);
  }
  auto bytes = logged_bytes(c);
  stats_.add(ProbeKind::Checkpoint, kSystemTask, bytes, config_.cost.ticks(ProbeKind::Checkpoint, bytes));
  checkpoints_.push(std::move(c));
  next_checkpoint_ = (clock / config_.checkpoint_period + 1) * config_.checkpoint_period;
}

void Recorder::on_task_switch(const sim::SwitchRecord& rec, const sim::Kernel& k) {
  ControlFlowEvent e;
  e.seq = next_seq_++;
  e.tick = rec.tick;
  e.kind = rec.kind;
  e.primitive = rec.primitive;
  e.object = rec.object;
  e.from = rec.from;
  e.to = rec.to;
  if (rec.kind == sim::SwitchKind::BlockingCall && last_call_ && last_call_->first == rec.from)
    e.marker = last_call_->second;
  else if (rec.from)
    e.marker = marker_of(*rec.from, k.state().tcb(*rec.from));
  auto bytes = logged_bytes(e);
  auto owner = rec.from ? rec.from : rec.to;
  stats_.add(ProbeKind::TaskSwitch, owner ? static_cast<std::int32_t>(owner->value) : kSystemTask, bytes,
             config_.cost.ticks(ProbeKind::TaskSwitch, bytes));
  control_.push(std::move(e));
}

void Recorder::on_blocking_call(TaskId task, Primitive, std::uint32_t, const sim::Kernel& k) {
  last_call_.emplace(task, marker_of(task, k.state().tcb(task)));
  stats_.add(ProbeKind::BlockingCall, static_cast<std::int32_t>(task.value), 0,
             config_.cost.ticks(ProbeKind::BlockingCall, 0));
}

void Recorder::log_data(DataFlowRecord rec, ProbeKind kind) {
  auto bytes = logged_bytes(rec);
  auto ticks = config_.cost.ticks(kind, bytes);
  stats_.add(kind, static_cast<std::int32_t>(rec.task.value), bytes, ticks);
  if (kind == ProbeKind::MessageIn) {
    auto& q = stats_.by_queue[rec.object];
    q.invocations += 1;
    q.bytes += bytes;
    q.ticks += ticks;
  }
  data_.at(rec.task.value).push(std::move(rec));
}

void Recorder::on_msg_received(TaskId task, sim::ReceiveSlot slot, QueueId queue, const Bytes& payload, Origin origin,
                               const sim::Kernel& k) {
  if (!scenario_->tasks[task.value].replayed) return;
  DataFlowRecord r;
  r.task = task;
  r.instance = slot.instance;
  r.tick = k.clock();
  r.kind = DataKind::MessageIn;
  r.object = queue.value;
  r.index = slot.index;
  r.origin = origin;
  r.bytes = payload;
  log_data(std::move(r), ProbeKind::MessageIn);
}

void Recorder::on_peripheral_read(TaskId task, PortId port, std::uint8_t value, const sim::Kernel& k) {
  if (!scenario_->tasks[task.value].replayed) return;
  const auto& tcb = k.state().tcb(task);
  DataFlowRecord r;
  r.task = task;
  r.instance = tcb.instance;
  r.tick = k.clock();
  r.kind = DataKind::PeripheralIn;
  r.object = port.value;
  r.index = tcb.port_index;
  r.origin = Origin::External;
  r.bytes = {value};
  log_data(std::move(r), ProbeKind::PeripheralIn);
}

void Recorder::on_activation(TaskId task, const sim::Kernel& k) {
  if (!scenario_->tasks[task.value].replayed) return;
  const auto& tcb = k.state().tcb(task);
  const auto& filter = config_.filters.at(task.value);
  DataFlowRecord r;
  r.task = task;
  r.instance = tcb.instance;
  r.tick = k.clock();
  r.kind = DataKind::StateSnapshot;
  r.origin = Origin::Internal;
  for (std::uint32_t i = 0; i < tcb.state_bytes.size(); ++i)
    if (std::find(filter.begin(), filter.end(), i) == filter.end()) r.bytes.push_back(tcb.state_bytes[i]);
  log_data(std::move(r), ProbeKind::StateSnapshot);
}

void Recorder::on_unblocked(TaskId task, Primitive prim, std::uint32_t object, TaskId by, const sim::Kernel& k) {
  if (!scenario_->tasks[task.value].replayed || scenario_->tasks[by.value].replayed) return;
  const auto& tcb = k.state().tcb(task);
  DataFlowRecord r;
  r.task = task;
  r.instance = tcb.instance;
  r.tick = k.clock();
  r.kind = DataKind::Wakeup;
  r.object = object;
  r.index = tcb.pc;
  r.origin = Origin::External;
  r.bytes = {static_cast<std::uint8_t>(prim)};
  log_data(std::move(r), ProbeKind::Wakeup);
}

Trace Recorder::finish(const sim::ExecutionResult& result) const {
  Trace t;
  t.scenario_text = sim::serialize_scenario(*scenario_);
  t.scenario_hash = sim::scenario_hash(*scenario_);
  t.config = config_;
  t.control = control_;
  t.data = data_;
  t.checkpoints = checkpoints_;
  t.stats = stats_;
  t.cause = result.cause;
  t.end_tick = result.end_tick;
  t.final_checksums = result.final_checksums;
  return t;
}

Trace record(const sim::Scenario& scenario, const RecorderConfig& config) {
  Recorder rec(scenario, config);
  sim::Kernel kernel(scenario);
  auto result = kernel.run(&rec);
  return rec.finish(result);
}

}  // namespace dreplay
