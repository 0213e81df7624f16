#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dreplay/bytes.hpp"
#include "dreplay/recorder/recorder.hpp"
#include "dreplay/recorder/records.hpp"
#include "dreplay/recorder/ring_buffer.hpp"
#include "dreplay/sim/kernel.hpp"

namespace dreplay {

/// Everything the recorder leaves behind at the failure point.
struct Trace {
  static constexpr std::uint16_t kVersion = 1;

  std::uint64_t scenario_hash = 0;
  std::string scenario_text;
  RecorderConfig config;
  RingBuffer<ControlFlowEvent> control{1};
  std::vector<RingBuffer<DataFlowRecord>> data;  // per task
  RingBuffer<CheckpointRecord> checkpoints{2};
  ProbeStats stats;
  sim::Termination cause = sim::Termination::RunLimit;
  Tick end_tick = 0;
  std::vector<std::uint32_t> final_checksums;
  std::optional<Tick> pruned_t_min;  // set by prune; later windows reuse it

  sim::Scenario scenario() const;

  friend bool operator==(const Trace&, const Trace&) = default;
};

Bytes encode_trace(const Trace& t);
/// Throws Error(TraceFormat) on malformed input or a scenario hash mismatch.
Trace decode_trace(std::span<const std::uint8_t> data);

void save_trace(const std::string& path, const Trace& t);
Trace load_trace(const std::string& path);

/// With `at`, only records stamped at that tick plus the governing checkpoint.
nlohmann::json trace_to_json(const Trace& t, std::optional<Tick> at = std::nullopt);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> data);

// Shared section framing for the trace and plan formats.
void write_section(ByteWriter& w, std::uint32_t tag, const Bytes& payload);
struct Section {
  std::uint32_t tag = 0;
  std::span<const std::uint8_t> payload;
};
std::vector<Section> read_sections(ByteReader& r);

template <typename T, typename Enc>
void encode_ring(ByteWriter& w, const RingBuffer<T>& ring, Enc enc) {
  w.u64(ring.capacity());
  w.u64(ring.overwritten());
  w.opt_u64(ring.newest_discarded());
  w.u32(static_cast<std::uint32_t>(ring.size()));
  for (const auto& e : ring) {
    ByteWriter inner;
    enc(inner, e);
    w.blob(inner.bytes());
  }
}

template <typename T, typename Dec>
RingBuffer<T> decode_ring(ByteReader& r, Dec dec) {
  auto capacity = r.u64();
  auto overwritten = r.u64();
  auto newest = r.opt_u64();
  auto n = r.count(4);
  if (capacity < 1 || n > capacity) throw Error(ErrorCode::TraceFormat, "ring entry count exceeds capacity");
  std::deque<T> entries;
  for (std::size_t i = 0; i < n; ++i) {
    auto blob = r.blob();
    ByteReader inner(blob);
    entries.push_back(dec(inner));
    if (!inner.done()) throw Error(ErrorCode::TraceFormat, "trailing bytes in ring entry");
  }
  return RingBuffer<T>(static_cast<std::size_t>(capacity), overwritten, newest, std::move(entries));
}

}  // namespace dreplay
