#include "dreplay/bench/bench.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "dreplay/recorder/trace.hpp"

namespace dreplay {
namespace {

Ratio ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return Ratio(0);
  return Ratio(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

BenchRow make_row(std::string probe, std::string scope, const ProbeCounter& c, Tick total) {
  BenchRow r;
  r.probe = std::move(probe);
  r.scope = std::move(scope);
  r.invocations = c.invocations;
  r.bytes = c.bytes;
  r.probe_ticks = c.ticks;
  r.frequency = ratio(c.invocations * 1000, total);
  r.bytes_per_function = ratio(c.bytes, c.invocations);
  r.ticks_per_invocation = ratio(c.ticks, c.invocations);
  r.utilization = ratio(c.ticks, total);
  r.bandwidth = ratio(c.bytes, total);
  return r;
}

}  // namespace

BenchReport bench_from_stats(const ProbeStats& stats, Tick total_ticks, const sim::Scenario& s) {
  BenchReport r;
  r.total_ticks = total_ticks;
  ProbeCounter sum;
  for (const auto& [key, c] : stats.by_task) {
    if (c.invocations == 0) continue;
    auto scope = key.second == kSystemTask ? std::string("system") : s.tasks.at(key.second).name;
    r.rows.push_back(make_row(to_string(key.first), std::move(scope), c, total_ticks));
    sum.invocations += c.invocations;
    sum.bytes += c.bytes;
    sum.ticks += c.ticks;
  }
  for (const auto& [q, c] : stats.by_queue)
    if (c.invocations > 0) r.queue_rows.push_back(make_row("message_in", s.queues.at(q).name, c, total_ticks));

  r.totals = make_row("all", "total", sum, total_ticks);
  // Column totals are sums of the rows, not ratios of the summed counters.
  r.totals.frequency = r.totals.utilization = r.totals.bandwidth = Ratio(0);
  for (const auto& row : r.rows) {
    r.totals.frequency += row.frequency;
    r.totals.utilization += row.utilization;
    r.totals.bandwidth += row.bandwidth;
  }
  return r;
}

BenchReport measure(const sim::Scenario& scenario, const RecorderConfig& config) {
  auto t = record(scenario, config);
  return bench_from_stats(t.stats, t.end_tick, scenario);
}

std::string format_ratio(const Ratio& r, int decimals) {
  auto num = r.numerator();
  auto den = r.denominator();
  bool neg = num < 0;
  if (neg) num = -num;
  std::int64_t scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  // Round half up on the scaled value.
  auto scaled = (static_cast<__int128>(num) * scale * 2 + den) / (static_cast<__int128>(den) * 2);
  auto whole = static_cast<std::int64_t>(scaled / scale);
  auto frac = static_cast<std::int64_t>(scaled % scale);
  std::ostringstream o;
  if (neg && scaled != 0) o << '-';
  o << whole;
  if (decimals > 0) o << '.' << std::setw(decimals) << std::setfill('0') << frac;
  return o.str();
}

namespace {

const char* kHeader[] = {"probe", "scope", "invocations", "freq/1000t", "bytes/fn", "ticks/inv", "utilization",
                         "bytes/tick"};

std::vector<std::string> cells(const BenchRow& r) {
  return {r.probe,
          r.scope,
          std::to_string(r.invocations),
          format_ratio(r.frequency, 3),
          format_ratio(r.bytes_per_function, 2),
          format_ratio(r.ticks_per_invocation, 2),
          format_ratio(r.utilization * 100, 4) + "%",
          format_ratio(r.bandwidth, 4)};
}

void table(std::ostringstream& o, const std::vector<BenchRow>& rows, const BenchRow* totals) {
  std::vector<std::vector<std::string>> all;
  all.emplace_back(std::begin(kHeader), std::end(kHeader));
  for (const auto& r : rows) all.push_back(cells(r));
  if (totals) all.push_back(cells(*totals));
  std::vector<std::size_t> width(all[0].size(), 0);
  for (const auto& row : all)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  for (std::size_t r = 0; r < all.size(); ++r) {
    if (totals && r + 1 == all.size()) {
      for (std::size_t i = 0; i < width.size(); ++i) o << std::string(width[i], '-') << (i + 1 < width.size() ? "  " : "");
      o << "\n";
    }
    for (std::size_t i = 0; i < all[r].size(); ++i) {
      if (i < 2) o << std::left << std::setw(static_cast<int>(width[i])) << all[r][i];
      else o << std::right << std::setw(static_cast<int>(width[i])) << all[r][i];
      if (i + 1 < all[r].size()) o << "  ";
    }
    o << "\n";
  }
}

}  // namespace

std::string format_text(const BenchReport& r) {
  std::ostringstream o;
  o << "run length: " << r.total_ticks << " ticks\n\n";
  table(o, r.rows, &r.totals);
  if (!r.queue_rows.empty()) {
    o << "\nper queue:\n";
    table(o, r.queue_rows, nullptr);
  }
  return o.str();
}

std::string format_csv(const BenchReport& r) {
  std::ostringstream o;
  o << "table,probe,scope,invocations,bytes,probe_ticks,frequency_per_1000,bytes_per_function,ticks_per_invocation,"
       "utilization,bytes_per_tick\n";
  auto line = [&](const char* table, const BenchRow& row) {
    o << table << ',' << row.probe << ',' << row.scope << ',' << row.invocations << ',' << row.bytes << ','
      << row.probe_ticks << ',' << format_ratio(row.frequency) << ',' << format_ratio(row.bytes_per_function) << ','
      << format_ratio(row.ticks_per_invocation) << ',' << format_ratio(row.utilization) << ','
      << format_ratio(row.bandwidth) << '\n';
  };
  for (const auto& row : r.rows) line("probe", row);
  line("probe", r.totals);
  for (const auto& row : r.queue_rows) line("queue", row);
  return o.str();
}

}  // namespace dreplay
