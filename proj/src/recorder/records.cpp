#include "dreplay/recorder/records.hpp"

#include "dreplay/recorder/checksum.hpp"

namespace dreplay {
namespace {

template <typename E>
E enum_from(std::uint8_t v, std::uint8_t max) {
  if (v > max) throw Error(ErrorCode::TraceFormat, "enum value out of range");
  return static_cast<E>(v);
}

void put_task(ByteWriter& w, const std::optional<TaskId>& t) { w.i32(t ? static_cast<std::int32_t>(t->value) : -1); }

std::optional<TaskId> get_task(ByteReader& r) {
  auto v = r.i32();
  if (v < -1) throw Error(ErrorCode::TraceFormat, "bad task id");
  if (v == -1) return std::nullopt;
  return TaskId{static_cast<std::uint32_t>(v)};
}

}  // namespace

Marker marker_of(TaskId task, const sim::TaskControlBlock& tcb) {
  return {task, tcb.pc, tcb.visits.at(tcb.pc), tcb.instance,
          context_checksum(tcb.state_bytes, tcb.loop_stack, tcb.pc)};
}

void encode(ByteWriter& w, const Marker& m) {
  w.u32(m.task.value);
  w.u32(m.pc);
  w.u32(m.occurrence);
  w.u64(m.instance);
  w.u32(m.checksum);
}

Marker decode_marker(ByteReader& r) {
  Marker m;
  m.task = TaskId{r.u32()};
  m.pc = r.u32();
  m.occurrence = r.u32();
  m.instance = r.u64();
  m.checksum = r.u32();
  return m;
}

void encode(ByteWriter& w, const ControlFlowEvent& e) {
  w.u64(e.seq);
  w.u64(e.tick);
  w.u8(static_cast<std::uint8_t>(e.kind));
  w.u8(static_cast<std::uint8_t>(e.primitive));
  w.u32(e.object);
  put_task(w, e.from);
  put_task(w, e.to);
  w.boolean(e.marker.has_value());
  encode(w, e.marker.value_or(Marker{}));
}

ControlFlowEvent decode_control_event(ByteReader& r) {
  ControlFlowEvent e;
  e.seq = r.u64();
  e.tick = r.u64();
  e.kind = enum_from<SwitchKind>(r.u8(), static_cast<std::uint8_t>(SwitchKind::TaskExit));
  e.primitive = enum_from<Primitive>(r.u8(), static_cast<std::uint8_t>(Primitive::Delay));
  e.object = r.u32();
  e.from = get_task(r);
  e.to = get_task(r);
  bool has = r.boolean();
  auto m = decode_marker(r);
  if (has) e.marker = m;
  return e;
}

void encode(ByteWriter& w, const DataFlowRecord& d) {
  w.u32(d.task.value);
  w.u64(d.instance);
  w.u64(d.tick);
  w.u8(static_cast<std::uint8_t>(d.kind));
  w.u32(d.object);
  w.u32(d.index);
  w.u8(static_cast<std::uint8_t>(d.origin));
  w.blob(d.bytes);
}

DataFlowRecord decode_data_record(ByteReader& r) {
  DataFlowRecord d;
  d.task = TaskId{r.u32()};
  d.instance = r.u64();
  d.tick = r.u64();
  d.kind = enum_from<DataKind>(r.u8(), static_cast<std::uint8_t>(DataKind::Wakeup));
  d.object = r.u32();
  d.index = r.u32();
  d.origin = enum_from<Origin>(r.u8(), static_cast<std::uint8_t>(Origin::External));
  d.bytes = r.blob();
  return d;
}

void encode(ByteWriter& w, const CheckpointRecord& c) {
  w.u64(c.tick);
  w.blob(c.kernel);
  w.u32(static_cast<std::uint32_t>(c.task_checksums.size()));
  for (auto v : c.task_checksums) w.u32(v);
  w.u32(static_cast<std::uint32_t>(c.task_instances.size()));
  for (auto v : c.task_instances) w.u64(v);
}

CheckpointRecord decode_checkpoint(ByteReader& r) {
  CheckpointRecord c;
  c.tick = r.u64();
  c.kernel = r.blob();
  auto n = r.count(4);
  for (std::size_t i = 0; i < n; ++i) c.task_checksums.push_back(r.u32());
  auto m = r.count(8);
  for (std::size_t i = 0; i < m; ++i) c.task_instances.push_back(r.u64());
  return c;
}

std::size_t logged_bytes(const ControlFlowEvent& e) {
  ByteWriter w;
  encode(w, e);
  return w.size();
}

std::size_t logged_bytes(const DataFlowRecord& r) { return r.bytes.size(); }

std::size_t logged_bytes(const CheckpointRecord& c) { return c.kernel.size(); }

const char* to_string(DataKind k) {
  switch (k) {
    case DataKind::MessageIn: return "MessageIn";
    case DataKind::PeripheralIn: return "PeripheralIn";
    case DataKind::StateSnapshot: return "StateSnapshot";
    case DataKind::Wakeup: return "Wakeup";
  }
  return "?";
}

}  // namespace dreplay
