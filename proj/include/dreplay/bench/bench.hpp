#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "dreplay/recorder/recorder.hpp"

namespace dreplay {

using Ratio = boost::rational<std::int64_t>;

struct BenchRow {
  std::string probe;
  std::string scope;  // task or queue name, "system" for checkpoints, "total" for the totals row
  std::uint64_t invocations = 0;
  std::uint64_t bytes = 0;
  std::uint64_t probe_ticks = 0;

  Ratio frequency;             // invocations per 1000 ticks
  Ratio bytes_per_function;
  Ratio ticks_per_invocation;
  Ratio utilization;           // probe ticks / run ticks
  Ratio bandwidth;             // bytes per tick
};

struct BenchReport {
  Tick total_ticks = 0;
  std::vector<BenchRow> rows;        // per probe kind and task
  std::vector<BenchRow> queue_rows;  // message probes per queue
  BenchRow totals;
};

BenchReport bench_from_stats(const ProbeStats& stats, Tick total_ticks, const sim::Scenario& scenario);
/// Records the scenario and reports the probe overhead.
BenchReport measure(const sim::Scenario& scenario, const RecorderConfig& config);

std::string format_text(const BenchReport& r);
std::string format_csv(const BenchReport& r);
std::string format_ratio(const Ratio& r, int decimals = 6);

}  // namespace dreplay
