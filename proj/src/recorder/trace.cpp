#include "dreplay/recorder/trace.hpp"

#include <fstream>
#include <iterator>

#include "json.hpp"

namespace dreplay {
namespace {

constexpr std::uint8_t kMagic[8] = {'D', 'R', 'T', 'R', 'A', 'C', 'E', '1'};

enum Tag : std::uint32_t {
  kScenario = 1,
  kConfig = 2,
  kControl = 3,
  kData = 4,
  kCheckpoints = 5,
  kStats = 6,
  kTermination = 7,
  kPruned = 8,  // optional: the t_min a prune applied
};

template <typename E>
E enum_at_most(std::uint8_t v, std::uint8_t max) {
  if (v > max) throw Error(ErrorCode::TraceFormat, "enum value out of range");
  return static_cast<E>(v);
}

void encode_config(ByteWriter& w, const RecorderConfig& c) {
  w.u32(static_cast<std::uint32_t>(c.data_capacity.size()));
  for (auto n : c.data_capacity) w.u64(n);
  w.u64(c.control_capacity);
  w.u64(c.checkpoint_capacity);
  w.u64(c.checkpoint_period);
  w.u32(static_cast<std::uint32_t>(c.filters.size()));
  for (const auto& f : c.filters) {
    w.u32(static_cast<std::uint32_t>(f.size()));
    for (auto v : f) w.u32(v);
  }
  for (auto b : c.cost.base_ticks) w.u32(b);
  w.u32(c.cost.bytes_per_tick);
}

RecorderConfig decode_config(ByteReader& r) {
  RecorderConfig c;
  auto n = r.count(8);
  for (std::size_t i = 0; i < n; ++i) c.data_capacity.push_back(r.u64());
  c.control_capacity = r.u64();
  c.checkpoint_capacity = r.u64();
  c.checkpoint_period = r.u64();
  auto nf = r.count(4);
  for (std::size_t i = 0; i < nf; ++i) {
    auto m = r.count(4);
    std::vector<std::uint32_t> f;
    for (std::size_t j = 0; j < m; ++j) f.push_back(r.u32());
    c.filters.push_back(std::move(f));
  }
  for (auto& b : c.cost.base_ticks) b = r.u32();
  c.cost.bytes_per_tick = r.u32();
  return c;
}

void encode_counter(ByteWriter& w, const ProbeCounter& c) {
  w.u64(c.invocations);
  w.u64(c.bytes);
  w.u64(c.ticks);
}

ProbeCounter decode_counter(ByteReader& r) {
  ProbeCounter c;
  c.invocations = r.u64();
  c.bytes = r.u64();
  c.ticks = r.u64();
  return c;
}

void encode_stats(ByteWriter& w, const ProbeStats& s) {
  w.u32(static_cast<std::uint32_t>(s.by_task.size()));
  for (const auto& [key, c] : s.by_task) {
    w.u8(static_cast<std::uint8_t>(key.first));
    w.i32(key.second);
    encode_counter(w, c);
  }
  w.u32(static_cast<std::uint32_t>(s.by_queue.size()));
  for (const auto& [q, c] : s.by_queue) {
    w.u32(q);
    encode_counter(w, c);
  }
}

ProbeStats decode_stats(ByteReader& r) {
  ProbeStats s;
  auto n = r.count(29);
  for (std::size_t i = 0; i < n; ++i) {
    auto kind = enum_at_most<ProbeKind>(r.u8(), kProbeKinds - 1);
    auto task = r.i32();
    s.by_task[{kind, task}] = decode_counter(r);
  }
  auto m = r.count(28);
  for (std::size_t i = 0; i < m; ++i) {
    auto q = r.u32();
    s.by_queue[q] = decode_counter(r);
  }
  return s;
}

nlohmann::json marker_json(const Marker& m) {
  return {{"task", m.task.value},
          {"pc", m.pc},
          {"occurrence", m.occurrence},
          {"instance", m.instance},
          {"checksum", m.checksum}};
}

nlohmann::json task_json(const std::optional<TaskId>& t) { return t ? nlohmann::json(t->value) : nlohmann::json(); }

}  // namespace

sim::Scenario Trace::scenario() const { return sim::parse_scenario(scenario_text); }

void write_section(ByteWriter& w, std::uint32_t tag, const Bytes& payload) {
  w.u32(tag);
  w.u64(payload.size());
  w.raw(payload);
}

std::vector<Section> read_sections(ByteReader& r) {
  std::vector<Section> out;
  while (!r.done()) {
    Section s;
    s.tag = r.u32();
    auto len = r.u64();
    if (len > r.remaining()) throw Error(ErrorCode::TraceFormat, "section length exceeds input");
    s.payload = r.take(static_cast<std::size_t>(len));
    out.push_back(s);
  }
  return out;
}

Bytes encode_trace(const Trace& t) {
  ByteWriter w;
  w.raw(kMagic);
  w.u16(Trace::kVersion);
  w.u64(t.scenario_hash);

  ByteWriter s;
  s.str(t.scenario_text);
  write_section(w, kScenario, s.bytes());

  ByteWriter c;
  encode_config(c, t.config);
  write_section(w, kConfig, c.bytes());

  ByteWriter ctl;
  encode_ring(ctl, t.control, [](ByteWriter& o, const ControlFlowEvent& e) { encode(o, e); });
  write_section(w, kControl, ctl.bytes());

  ByteWriter d;
  d.u32(static_cast<std::uint32_t>(t.data.size()));
  for (const auto& ring : t.data)
    encode_ring(d, ring, [](ByteWriter& o, const DataFlowRecord& e) { encode(o, e); });
  write_section(w, kData, d.bytes());

  ByteWriter cp;
  encode_ring(cp, t.checkpoints, [](ByteWriter& o, const CheckpointRecord& e) { encode(o, e); });
  write_section(w, kCheckpoints, cp.bytes());

  ByteWriter st;
  encode_stats(st, t.stats);
  write_section(w, kStats, st.bytes());

  ByteWriter term;
  term.u8(static_cast<std::uint8_t>(t.cause));
  term.u64(t.end_tick);
  term.u32(static_cast<std::uint32_t>(t.final_checksums.size()));
  for (auto x : t.final_checksums) term.u32(x);
  write_section(w, kTermination, term.bytes());

  if (t.pruned_t_min) {
    ByteWriter pr;
    pr.u64(*t.pruned_t_min);
    write_section(w, kPruned, pr.bytes());
  }

  return std::move(w).take();
}

Trace decode_trace(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  auto magic = r.take(sizeof kMagic);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic)))
    throw Error(ErrorCode::TraceFormat, "not a trace file");
  auto version = r.u16();
  if (version != Trace::kVersion)
    throw Error(ErrorCode::TraceFormat, "unsupported trace version " + std::to_string(version));
  Trace t;
  t.scenario_hash = r.u64();
  std::uint32_t seen = 0;
  for (const auto& sec : read_sections(r)) {
    ByteReader p(sec.payload);
    switch (sec.tag) {
      case kScenario: t.scenario_text = p.str(); break;
      case kConfig: t.config = decode_config(p); break;
      case kControl: t.control = decode_ring<ControlFlowEvent>(p, decode_control_event); break;
      case kData: {
        auto n = p.count(21);
        for (std::size_t i = 0; i < n; ++i) t.data.push_back(decode_ring<DataFlowRecord>(p, decode_data_record));
        break;
      }
      case kCheckpoints: t.checkpoints = decode_ring<CheckpointRecord>(p, decode_checkpoint); break;
      case kStats: t.stats = decode_stats(p); break;
      case kTermination: {
        t.cause = enum_at_most<sim::Termination>(p.u8(), 3);
        t.end_tick = p.u64();
        auto n = p.count(4);
        for (std::size_t i = 0; i < n; ++i) t.final_checksums.push_back(p.u32());
        break;
      }
      case kPruned:
        t.pruned_t_min = p.u64();
        break;
      default: continue;  // unknown sections are skipped
    }
    if (!p.done()) throw Error(ErrorCode::TraceFormat, "trailing bytes in section " + std::to_string(sec.tag));
    seen |= 1u << sec.tag;
  }
  for (std::uint32_t tag = kScenario; tag <= kTermination; ++tag)
    if (!(seen & (1u << tag))) throw Error(ErrorCode::TraceFormat, "missing section " + std::to_string(tag));

  sim::Scenario s;
  try {
    s = t.scenario();
  } catch (const Error& e) {
    throw Error(ErrorCode::TraceFormat, std::string("embedded scenario: ") + e.what());
  }
  if (sim::scenario_hash(s) != t.scenario_hash) throw Error(ErrorCode::TraceFormat, "scenario hash mismatch");
  if (t.data.size() != s.tasks.size() || t.final_checksums.size() != s.tasks.size())
    throw Error(ErrorCode::TraceFormat, "per-task section sizes do not match the scenario");
  if (t.pruned_t_min && *t.pruned_t_min > t.end_tick) throw Error(ErrorCode::TraceFormat, "pruned past t_fail");
  try {
    t.config.validate(s);
  } catch (const Error& e) {
    throw Error(ErrorCode::TraceFormat, std::string("recorder config: ") + e.what());
  }
  return t;
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path);
}

void save_trace(const std::string& path, const Trace& t) { write_file(path, encode_trace(t)); }

Trace load_trace(const std::string& path) { return decode_trace(read_file(path)); }

nlohmann::json trace_to_json(const Trace& t, std::optional<Tick> at) {
  using nlohmann::json;
  auto keep = [&](Tick tick) { return !at || tick == *at; };
  auto ring_meta = [](const auto& ring) {
    json j{{"capacity", ring.capacity()}, {"size", ring.size()}, {"overwritten", ring.overwritten()}};
    j["newest_discarded"] = ring.newest_discarded() ? json(*ring.newest_discarded()) : json();
    return j;
  };

  json out;
  out["scenario_hash"] = t.scenario_hash;
  out["termination"] = {{"cause", sim::to_string(t.cause)}, {"end_tick", t.end_tick},
                        {"final_checksums", t.final_checksums}};
  out["pruned_t_min"] = t.pruned_t_min ? json(*t.pruned_t_min) : json(nullptr);

  json control = ring_meta(t.control);
  control["events"] = json::array();
  for (const auto& e : t.control) {
    if (!keep(e.tick)) continue;
    json j{{"seq", e.seq},
           {"tick", e.tick},
           {"kind", sim::to_string(e.kind)},
           {"from", task_json(e.from)},
           {"to", task_json(e.to)}};
    if (e.kind == SwitchKind::BlockingCall) {
      j["primitive"] = static_cast<int>(e.primitive);
      j["object"] = e.object;
    }
    if (e.marker) j["marker"] = marker_json(*e.marker);
    control["events"].push_back(std::move(j));
  }
  out["control"] = std::move(control);

  json data = json::array();
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    json ring = ring_meta(t.data[i]);
    ring["task"] = i;
    ring["records"] = json::array();
    for (const auto& d : t.data[i]) {
      if (!keep(d.tick)) continue;
      ring["records"].push_back({{"tick", d.tick},
                                 {"instance", d.instance},
                                 {"kind", to_string(d.kind)},
                                 {"object", d.object},
                                 {"index", d.index},
                                 {"origin", sim::to_string(d.origin)},
                                 {"bytes", d.bytes}});
    }
    data.push_back(std::move(ring));
  }
  out["data"] = std::move(data);

  json cps = ring_meta(t.checkpoints);
  cps["checkpoints"] = json::array();
  const CheckpointRecord* governing = nullptr;
  for (const auto& c : t.checkpoints)
    if (at && c.tick <= *at) governing = &c;
  for (const auto& c : t.checkpoints) {
    if (at && &c != governing) continue;
    cps["checkpoints"].push_back({{"tick", c.tick},
                                  {"kernel_bytes", c.kernel.size()},
                                  {"task_checksums", c.task_checksums},
                                  {"task_instances", c.task_instances}});
  }
  out["checkpoints"] = std::move(cps);

  json stats = json::array();
  for (const auto& [key, c] : t.stats.by_task)
    stats.push_back({{"probe", to_string(key.first)},
                     {"task", key.second},
                     {"invocations", c.invocations},
                     {"bytes", c.bytes},
                     {"ticks", c.ticks}});
  out["stats"] = std::move(stats);
  return out;
}

}  // namespace dreplay
