#include "dreplay/sim/state.hpp"

#include <string>

namespace dreplay::sim {
namespace {

constexpr std::uint32_t kStateMagic = 0x4B535444;  // "DTSK"

void put_ids(ByteWriter& w, const std::deque<TaskId>& ids) {
  w.u32(static_cast<std::uint32_t>(ids.size()));
  for (auto t : ids) w.u32(t.value);
}

std::deque<TaskId> get_ids(ByteReader& r, std::size_t task_count) {
  std::deque<TaskId> out;
  auto n = r.count(4);
  for (std::size_t i = 0; i < n; ++i) {
    auto v = r.u32();
    if (v >= task_count) throw Error(ErrorCode::TraceFormat, "task id out of range in checkpoint");
    out.emplace_back(v);
  }
  return out;
}

template <typename E>
E get_enum(ByteReader& r, std::uint8_t max) {
  auto v = r.u8();
  if (v > max) throw Error(ErrorCode::TraceFormat, "enum value out of range in checkpoint");
  return static_cast<E>(v);
}

}  // namespace

KernelState boot_state(const Scenario& s) {
  KernelState k;
  k.tasks.resize(s.tasks.size());
  for (std::uint32_t i = 0; i < s.tasks.size(); ++i) {
    auto& t = k.tasks[i];
    const auto& p = s.tasks[i];
    t.state = TaskState::Ready;
    t.state_bytes.assign(p.state_size, 0);
    t.visits.assign(p.body.size() + 1, 0);
    t.ready_reason = ReadyReason::Boot;
    k.ready.emplace_back(i);
  }
  k.queues.resize(s.queues.size());
  k.semaphores.resize(s.semaphores.size());
  for (std::size_t i = 0; i < s.semaphores.size(); ++i) k.semaphores[i].count = s.semaphores[i].initial;
  k.port_cursors.assign(s.ports.size(), 0);
  return k;
}

void encode_state(ByteWriter& w, const KernelState& k) {
  w.u32(kStateMagic);
  w.u64(k.clock);
  w.boolean(k.booted);
  w.u32(static_cast<std::uint32_t>(k.tasks.size()));
  for (const auto& t : k.tasks) {
    w.u8(static_cast<std::uint8_t>(t.state));
    w.u32(t.pc);
    w.u32(static_cast<std::uint32_t>(t.loop_stack.size()));
    for (auto c : t.loop_stack) w.u32(c);
    w.u64(t.instance);
    w.blob(t.state_bytes);
    w.u64(t.instr_in_instance);
    w.u32(static_cast<std::uint32_t>(t.visits.size()));
    for (auto v : t.visits) w.u32(v);
    w.u32(t.compute_left);
    w.u32(t.recv_index);
    w.u32(t.port_index);
    w.u8(static_cast<std::uint8_t>(t.pending));
    w.u32(t.pending_object);
    w.blob(t.pending_payload);
    w.u64(t.wake_tick);
    w.u8(static_cast<std::uint8_t>(t.ready_reason));
  }
  w.u32(static_cast<std::uint32_t>(k.queues.size()));
  for (const auto& q : k.queues) {
    w.u32(static_cast<std::uint32_t>(q.pending.size()));
    for (const auto& m : q.pending) {
      w.i32(m.sender);
      w.blob(m.payload);
    }
    put_ids(w, q.blocked_receivers);
    put_ids(w, q.blocked_senders);
    w.u64(q.sent);
    w.u64(q.delivered);
    w.u64(q.dropped);
  }
  w.u32(static_cast<std::uint32_t>(k.semaphores.size()));
  for (const auto& sem : k.semaphores) {
    w.u32(sem.count);
    put_ids(w, sem.blocked);
  }
  w.u64(k.next_interrupt);
  w.u32(static_cast<std::uint32_t>(k.port_cursors.size()));
  for (auto c : k.port_cursors) w.u64(c);
  w.opt_u64(k.running ? std::optional<std::uint64_t>(k.running->value) : std::nullopt);
  w.u32(static_cast<std::uint32_t>(k.ready.size()));
  for (auto t : k.ready) w.u32(t.value);
}

Bytes encode_state(const KernelState& k) {
  ByteWriter w;
  encode_state(w, k);
  return std::move(w).take();
}

KernelState decode_state(const Scenario& s, ByteReader& r) {
  if (r.u32() != kStateMagic) throw Error(ErrorCode::TraceFormat, "bad kernel checkpoint magic");
  KernelState k;
  k.clock = r.u64();
  k.booted = r.boolean();
  auto ntasks = r.count();
  if (ntasks != s.tasks.size()) throw Error(ErrorCode::TraceFormat, "checkpoint task count does not match scenario");
  k.tasks.resize(ntasks);
  for (std::size_t i = 0; i < ntasks; ++i) {
    auto& t = k.tasks[i];
    const auto& p = s.tasks[i];
    t.state = get_enum<TaskState>(r, static_cast<std::uint8_t>(TaskState::Failed));
    t.pc = r.u32();
    if (t.pc > p.end_pc()) throw Error(ErrorCode::TraceFormat, "checkpoint pc outside program");
    auto nloop = r.count(4);
    for (std::size_t j = 0; j < nloop; ++j) t.loop_stack.push_back(r.u32());
    t.instance = r.u64();
    t.state_bytes = r.blob();
    if (t.state_bytes.size() != p.state_size) throw Error(ErrorCode::TraceFormat, "checkpoint state size mismatch");
    t.instr_in_instance = r.u64();
    auto nvisits = r.count(4);
    if (nvisits != p.body.size() + 1) throw Error(ErrorCode::TraceFormat, "checkpoint visit table mismatch");
    t.visits.resize(nvisits);
    for (auto& v : t.visits) v = r.u32();
    t.compute_left = r.u32();
    t.recv_index = r.u32();
    t.port_index = r.u32();
    t.pending = get_enum<Primitive>(r, static_cast<std::uint8_t>(Primitive::Delay));
    t.pending_object = r.u32();
    t.pending_payload = r.blob();
    t.wake_tick = r.u64();
    t.ready_reason = get_enum<ReadyReason>(r, static_cast<std::uint8_t>(ReadyReason::Preempted));
  }
  auto nq = r.count();
  if (nq != s.queues.size()) throw Error(ErrorCode::TraceFormat, "checkpoint queue count mismatch");
  k.queues.resize(nq);
  for (auto& q : k.queues) {
    auto nm = r.count(8);
    for (std::size_t j = 0; j < nm; ++j) {
      Message m;
      m.sender = r.i32();
      m.payload = r.blob();
      q.pending.push_back(std::move(m));
    }
    q.blocked_receivers = get_ids(r, ntasks);
    q.blocked_senders = get_ids(r, ntasks);
    q.sent = r.u64();
    q.delivered = r.u64();
    q.dropped = r.u64();
  }
  auto ns = r.count();
  if (ns != s.semaphores.size()) throw Error(ErrorCode::TraceFormat, "checkpoint semaphore count mismatch");
  k.semaphores.resize(ns);
  for (auto& sem : k.semaphores) {
    sem.count = r.u32();
    sem.blocked = get_ids(r, ntasks);
  }
  k.next_interrupt = r.u64();
  auto np = r.count(8);
  if (np != s.ports.size()) throw Error(ErrorCode::TraceFormat, "checkpoint port count mismatch");
  k.port_cursors.resize(np);
  for (auto& c : k.port_cursors) c = r.u64();
  if (auto run = r.opt_u64()) {
    if (*run >= ntasks) throw Error(ErrorCode::TraceFormat, "running task out of range");
    k.running = TaskId{static_cast<std::uint32_t>(*run)};
  }
  auto nready = r.count(4);
  for (std::size_t j = 0; j < nready; ++j) {
    auto v = r.u32();
    if (v >= ntasks) throw Error(ErrorCode::TraceFormat, "ready task out of range");
    k.ready.emplace_back(v);
  }
  return k;
}

KernelState decode_state(const Scenario& s, std::span<const std::uint8_t> blob) {
  ByteReader r(blob);
  auto k = decode_state(s, r);
  if (!r.done()) throw Error(ErrorCode::TraceFormat, "trailing bytes after kernel checkpoint");
  return k;
}

const char* to_string(TaskState s) {
  switch (s) {
    case TaskState::Ready: return "Ready";
    case TaskState::Running: return "Running";
    case TaskState::BlockedOnQueue: return "BlockedOnQueue";
    case TaskState::BlockedOnSem: return "BlockedOnSem";
    case TaskState::Delayed: return "Delayed";
    case TaskState::Halted: return "Halted";
    case TaskState::Failed: return "Failed";
  }
  return "?";
}

const char* to_string(Primitive p) {
  switch (p) {
    case Primitive::None: return "None";
    case Primitive::Send: return "Send";
    case Primitive::Recv: return "Recv";
    case Primitive::SemWait: return "SemWait";
    case Primitive::SemSignal: return "SemSignal";
    case Primitive::Delay: return "Delay";
  }
  return "?";
}

}  // namespace dreplay::sim
