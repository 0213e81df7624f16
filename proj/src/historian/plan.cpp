#include "dreplay/historian/plan.hpp"

#include <iterator>

namespace dreplay {
namespace {

constexpr std::uint8_t kMagic[8] = {'D', 'R', 'P', 'L', 'A', 'N', '0', '1'};

enum Tag : std::uint32_t {
  kScenario = 1,
  kWindow = 2,
  kStart = 3,
  kForced = 4,
  kInjections = 5,
  kPorts = 6,
  kVerification = 7,
  kTermination = 8,
  kWakeups = 9,
};

void encode_records(ByteWriter& w, const std::map<AccessKey, DataFlowRecord>& m) {
  w.u32(static_cast<std::uint32_t>(m.size()));
  for (const auto& [k, rec] : m) {
    ByteWriter inner;
    encode(inner, rec);
    w.blob(inner.bytes());
  }
}

std::map<AccessKey, DataFlowRecord> decode_records(ByteReader& r) {
  std::map<AccessKey, DataFlowRecord> m;
  auto n = r.count(4);
  for (std::size_t i = 0; i < n; ++i) {
    auto blob = r.blob();
    ByteReader inner(blob);
    auto rec = decode_data_record(inner);
    AccessKey key{rec.task, rec.instance, rec.index};
    if (!m.emplace(key, std::move(rec)).second) throw Error(ErrorCode::TraceFormat, "duplicate access key in plan");
  }
  return m;
}

void check_dense(const std::map<AccessKey, DataFlowRecord>& a, const std::map<AccessKey, DataFlowRecord>& b,
                 const char* what) {
  // Receive indices are shared by injections and verification, so density is
  // checked over their union.
  std::map<AccessKey, int> all;
  for (const auto& [k, v] : a) all[k] = 0;
  for (const auto& [k, v] : b) all[k] = 0;
  const AccessKey* prev = nullptr;
  for (const auto& [k, v] : all) {
    if (prev && prev->task == k.task && prev->instance == k.instance && k.index != prev->index + 1)
      throw Error(ErrorCode::InvariantViolation, std::string(what) + " access indices are not dense");
    prev = &k;
  }
}

}  // namespace

sim::Scenario ReplayPlan::scenario() const { return sim::parse_scenario(scenario_text); }

ReplayPlan build_plan(const Trace& t, const ConsistentWindow& w, const StartState& start) {
  ReplayPlan p;
  p.scenario_hash = t.scenario_hash;
  p.scenario_text = t.scenario_text;
  p.window = w;
  p.start = start;
  p.cause = t.cause;
  p.t_fail = t.end_tick;
  p.reference_checksums = t.final_checksums;

  for (const auto& e : t.control) {
    if (e.tick < start.t_start || e.tick > w.t_fail) continue;
    if (!p.forced.empty() && e.seq != p.forced.back().seq + 1)
      throw Error(ErrorCode::GapInControlFlow, "control flow jumps from seq " + std::to_string(p.forced.back().seq) +
                                                   " to " + std::to_string(e.seq));
    p.forced.push_back(e);
  }

  auto s = t.scenario();
  for (std::size_t i = 0; i < s.tasks.size(); ++i) {
    if (!s.tasks[i].replayed) continue;
    for (const auto& d : t.data[i]) {
      if (d.tick < start.t_start || d.tick > w.t_fail) continue;
      AccessKey key{d.task, d.instance, d.index};
      switch (d.kind) {
        case DataKind::MessageIn:
          (d.origin == Origin::External ? p.injections : p.verification).emplace(key, d);
          break;
        case DataKind::PeripheralIn: p.port_values.emplace(key, d); break;
        case DataKind::StateSnapshot: break;
        case DataKind::Wakeup: p.wakeups.push_back(d); break;
      }
    }
  }
  check_dense(p.injections, p.verification, "receive");
  check_dense(p.port_values, {}, "port");
  return p;
}

ReplayPlan plan_from_trace(const Trace& t) {
  Trace pruned = t;
  auto report = prune(pruned);
  auto start = find_start(pruned, report.window);
  return build_plan(pruned, report.window, start);
}

Bytes encode_plan(const ReplayPlan& p) {
  ByteWriter w;
  w.raw(kMagic);
  w.u16(ReplayPlan::kVersion);
  w.u64(p.scenario_hash);

  ByteWriter s;
  s.str(p.scenario_text);
  write_section(w, kScenario, s.bytes());

  ByteWriter win;
  win.u64(p.window.t_min);
  win.u64(p.window.t_fail);
  write_section(w, kWindow, win.bytes());

  ByteWriter st;
  st.u64(p.start.t_start);
  {
    ByteWriter c;
    encode(c, p.start.checkpoint);
    st.blob(c.bytes());
  }
  st.u32(static_cast<std::uint32_t>(p.start.snapshots.size()));
  for (const auto& snap : p.start.snapshots) {
    st.boolean(snap.has_value());
    if (snap) {
      ByteWriter c;
      encode(c, *snap);
      st.blob(c.bytes());
    }
  }
  write_section(w, kStart, st.bytes());

  ByteWriter f;
  f.u32(static_cast<std::uint32_t>(p.forced.size()));
  for (const auto& e : p.forced) {
    ByteWriter c;
    encode(c, e);
    f.blob(c.bytes());
  }
  write_section(w, kForced, f.bytes());

  ByteWriter inj, ports, ver;
  encode_records(inj, p.injections);
  encode_records(ports, p.port_values);
  encode_records(ver, p.verification);
  write_section(w, kInjections, inj.bytes());
  write_section(w, kPorts, ports.bytes());
  write_section(w, kVerification, ver.bytes());

  ByteWriter wk;
  wk.u32(static_cast<std::uint32_t>(p.wakeups.size()));
  for (const auto& d : p.wakeups) {
    ByteWriter c;
    encode(c, d);
    wk.blob(c.bytes());
  }
  write_section(w, kWakeups, wk.bytes());

  ByteWriter term;
  term.u8(static_cast<std::uint8_t>(p.cause));
  term.u64(p.t_fail);
  term.u32(static_cast<std::uint32_t>(p.reference_checksums.size()));
  for (auto x : p.reference_checksums) term.u32(x);
  write_section(w, kTermination, term.bytes());
  return std::move(w).take();
}

ReplayPlan decode_plan(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  auto magic = r.take(sizeof kMagic);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) throw Error(ErrorCode::TraceFormat, "not a plan file");
  auto version = r.u16();
  if (version != ReplayPlan::kVersion)
    throw Error(ErrorCode::TraceFormat, "unsupported plan version " + std::to_string(version));
  ReplayPlan p;
  p.scenario_hash = r.u64();
  std::uint32_t seen = 0;
  for (const auto& sec : read_sections(r)) {
    ByteReader q(sec.payload);
    switch (sec.tag) {
      case kScenario: p.scenario_text = q.str(); break;
      case kWindow:
        p.window.t_min = q.u64();
        p.window.t_fail = q.u64();
        break;
      case kStart: {
        p.start.t_start = q.u64();
        auto blob = q.blob();
        ByteReader c(blob);
        p.start.checkpoint = decode_checkpoint(c);
        auto n = q.count(1);
        for (std::size_t i = 0; i < n; ++i) {
          if (!q.boolean()) {
            p.start.snapshots.emplace_back();
            continue;
          }
          auto sb = q.blob();
          ByteReader sr(sb);
          p.start.snapshots.push_back(decode_data_record(sr));
        }
        break;
      }
      case kForced: {
        auto n = q.count(4);
        for (std::size_t i = 0; i < n; ++i) {
          auto blob = q.blob();
          ByteReader c(blob);
          p.forced.push_back(decode_control_event(c));
        }
        break;
      }
      case kInjections: p.injections = decode_records(q); break;
      case kPorts: p.port_values = decode_records(q); break;
      case kVerification: p.verification = decode_records(q); break;
      case kWakeups: {
        auto n = q.count(4);
        for (std::size_t i = 0; i < n; ++i) {
          auto blob = q.blob();
          ByteReader c(blob);
          p.wakeups.push_back(decode_data_record(c));
        }
        break;
      }
      case kTermination: {
        if (auto c = q.u8(); c <= 3) p.cause = static_cast<sim::Termination>(c);
        else throw Error(ErrorCode::TraceFormat, "bad termination cause");
        p.t_fail = q.u64();
        auto n = q.count(4);
        for (std::size_t i = 0; i < n; ++i) p.reference_checksums.push_back(q.u32());
        break;
      }
      default: continue;
    }
    if (!q.done()) throw Error(ErrorCode::TraceFormat, "trailing bytes in plan section " + std::to_string(sec.tag));
    seen |= 1u << sec.tag;
  }
  for (std::uint32_t tag = kScenario; tag <= kWakeups; ++tag)
    if (!(seen & (1u << tag))) throw Error(ErrorCode::TraceFormat, "missing plan section " + std::to_string(tag));
  sim::Scenario s;
  try {
    s = p.scenario();
  } catch (const Error& e) {
    throw Error(ErrorCode::TraceFormat, std::string("embedded scenario: ") + e.what());
  }
  if (sim::scenario_hash(s) != p.scenario_hash) throw Error(ErrorCode::TraceFormat, "scenario hash mismatch");
  if (p.reference_checksums.size() != s.tasks.size() || p.start.snapshots.size() != s.tasks.size())
    throw Error(ErrorCode::TraceFormat, "per-task plan sizes do not match the scenario");
  return p;
}

void save_plan(const std::string& path, const ReplayPlan& p) { write_file(path, encode_plan(p)); }

ReplayPlan load_plan(const std::string& path) { return decode_plan(read_file(path)); }

}  // namespace dreplay
