// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failing criteria.
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "dreplay/bench/bench.hpp"
#include "dreplay/historian/plan.hpp"
#include "dreplay/recorder/recorder.hpp"
#include "dreplay/replay/session.hpp"
#include "dreplay/sim/kernel.hpp"
#include "dreplay/sim/scenario.hpp"
#include "fuzz.hpp"

using namespace dreplay;

namespace {

constexpr int kFuzzCount = 100;

struct Named {
  std::string name;
  std::string text;
};

std::vector<Named> scenario_files() {
  std::vector<Named> out;
  for (const auto& e : std::filesystem::directory_iterator(DREPLAY_SCENARIO_DIR)) {
    if (e.path().extension() != ".scn") continue;
    std::ifstream in(e.path());
    std::stringstream ss;
    ss << in.rdbuf();
    out.push_back({e.path().stem().string(), ss.str()});
  }
  std::sort(out.begin(), out.end(), [](const Named& a, const Named& b) { return a.name < b.name; });
  return out;
}

std::vector<Named> fuzz_corpus() {
  std::vector<Named> out;
  for (int i = 0; i < kFuzzCount; ++i) out.push_back({"fuzz-" + std::to_string(i), testing::generate_scenario(i)});
  return out;
}

std::vector<Named> corpus() {
  auto all = scenario_files();
  auto fz = fuzz_corpus();
  all.insert(all.end(), fz.begin(), fz.end());
  return all;
}

RecorderConfig config_for(const sim::Scenario& s) {
  auto cfg = RecorderConfig::defaults_for(s);
  cfg.checkpoint_period = 100;
  return cfg;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& fn) {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::ostringstream line;
  line << (o.pass ? "PASS" : "FAIL") << "  " << name << "  (" << o.detail << "; " << std::fixed;
  line.precision(2);
  line << secs << "s)";
  std::cout << line.str() << std::endl;
}

Outcome replay_determinism() {
  auto t0 = std::chrono::steady_clock::now();
  int passed = 0, with_preemption = 0, with_loops = 0;
  std::string first_failure;
  for (const auto& sc : fuzz_corpus()) {
    try {
      auto s = sim::parse_scenario(sc.text);
      auto trace = record(s, config_for(s));
      auto plan = plan_from_trace(trace);
      if (std::any_of(plan.forced.begin(), plan.forced.end(),
                      [](const ControlFlowEvent& e) { return e.kind == SwitchKind::Preemption; }))
        ++with_preemption;
      if (sc.text.find("loop ") != std::string::npos) ++with_loops;
      auto r = replay_and_verify(plan);
      if (r.passed()) ++passed;
      else if (first_failure.empty()) first_failure = sc.name + ": " + r.summary();
    } catch (const std::exception& e) {
      if (first_failure.empty()) first_failure = sc.name + ": " + e.what();
    }
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream d;
  d << passed << "/" << kFuzzCount << " passed, " << with_preemption << " with preemptions, " << with_loops
    << " with loops";
  if (!first_failure.empty()) d << "; first failure " << first_failure;
  return {passed == kFuzzCount && secs < 120.0 && with_preemption > 0, d.str()};
}

Outcome marker_discrimination() {
  auto files = scenario_files();
  auto it = std::find_if(files.begin(), files.end(), [](const Named& n) { return n.name == "loop_preempt"; });
  if (it == files.end()) return {false, "loop_preempt.scn missing"};
  auto s = sim::parse_scenario(it->text);
  auto plan = plan_from_trace(record(s, config_for(s)));

  // Oracle: the worker body is `loop 3 { compute 3; set }`, so visits to the
  // compute pc number 3 per iteration; occurrence / 3 is the iteration.
  const std::uint32_t worker = 1, compute_pc = 1;
  std::vector<const ControlFlowEvent*> pre;
  for (const auto& e : plan.forced)
    if (e.kind == SwitchKind::Preemption && e.from && e.from->value == worker) pre.push_back(&e);
  if (pre.size() != 2) return {false, std::to_string(pre.size()) + " worker preemptions, expected 2"};
  for (const auto* e : pre)
    if (e->marker->pc != compute_pc) return {false, "preemption outside the compute statement"};
  if (pre[0]->marker->occurrence / 3 == pre[1]->marker->occurrence / 3) return {false, "both in one iteration"};
  if (pre[0]->marker->checksum == pre[1]->marker->checksum) return {false, "checksums already disambiguate"};

  std::vector<std::uint32_t> seen;
  auto session = ReplaySession::load(plan);
  session.on_switch = [&](const ControlFlowEvent& e) {
    if (e.kind == SwitchKind::Preemption) seen.push_back(session.inspect(TaskId{worker}).occurrence);
  };
  session.resume();
  auto normal = verify(session);
  std::vector<std::uint32_t> expected{pre[0]->marker->occurrence, pre[1]->marker->occurrence};

  ReplayOptions mutant;
  mutant.match_occurrence = false;
  auto ms = ReplaySession::load(plan, mutant);
  ms.resume();
  auto mutated = verify(ms);

  std::ostringstream d;
  d << "occurrences " << expected[0] << "," << expected[1] << "; normal " << (normal.passed() ? "PASS" : "FAIL")
    << ", without occurrence " << (mutated.passed() ? "PASS" : "FAIL");
  return {normal.passed() && seen == expected && !mutated.passed(), d.str()};
}

Outcome pruning_oracle() {
  struct Entry {
    Tick tick;
  };
  std::mt19937_64 rng(20261014);
  int agree = 0;
  const int rounds = 1000;
  for (int round = 0; round < rounds; ++round) {
    int n = 1 + static_cast<int>(rng() % 6);
    std::vector<BufferExtent> ext;
    std::vector<std::string> names;
    std::vector<std::vector<Tick>> retained;
    Tick t_fail = 0;
    for (int b = 0; b < n; ++b) {
      std::size_t cap = 1 + rng() % 50;
      std::size_t pushes = 1 + rng() % 50;
      RingBuffer<Entry> ring(cap);
      std::vector<Tick> all;
      Tick t = rng() % 40;
      for (std::size_t i = 0; i < pushes; ++i) {
        ring.push({t});
        all.push_back(t);
        t += rng() % 8;
      }
      ext.push_back(extent_of(ring));
      names.push_back("b" + std::to_string(b));
      retained.emplace_back(all.end() - static_cast<std::ptrdiff_t>(std::min(cap, all.size())), all.end());
      t_fail = std::max(t_fail, all.back());
    }
    // Brute force: the first tick at which every buffer holds its oldest entry.
    Tick brute = 0;
    for (;; ++brute) {
      bool all_have = true;
      for (const auto& v : retained) all_have = all_have && v.front() <= brute;
      if (all_have) break;
    }
    if (compute_window(ext, names, t_fail).t_min == brute) ++agree;
  }
  return {agree == rounds, std::to_string(agree) + "/" + std::to_string(rounds) + " configurations agree"};
}

Outcome probe_transparency() {
  int equal = 0, total = 0;
  std::string first;
  for (const auto& sc : corpus()) {
    ++total;
    auto s = sim::parse_scenario(sc.text);
    auto bare = sim::Kernel(s).run();
    Recorder rec(s, config_for(s));
    auto traced = sim::Kernel(s).run(&rec);
    if (bare.switches == traced.switches && bare.end_tick == traced.end_tick &&
        bare.final_checksums == traced.final_checksums)
      ++equal;
    else if (first.empty())
      first = sc.name;
  }
  std::string d = std::to_string(equal) + "/" + std::to_string(total) + " scenarios identical";
  if (!first.empty()) d += "; first difference " + first;
  return {equal == total, d};
}

Outcome bench_accounting() {
  int checked = 0;
  for (const auto& sc : corpus()) {
    auto s = sim::parse_scenario(sc.text);
    auto r = measure(s, config_for(s));
    Ratio freq, util, bw;
    for (const auto& row : r.rows) {
      if (row.utilization != Ratio(row.invocations) * row.ticks_per_invocation / Ratio(r.total_ticks) ||
          row.bandwidth != row.frequency * row.bytes_per_function / 1000)
        return {false, "identity broken in " + sc.name + " row " + row.probe + "/" + row.scope};
      freq += row.frequency;
      util += row.utilization;
      bw += row.bandwidth;
    }
    if (freq != r.totals.frequency || util != r.totals.utilization || bw != r.totals.bandwidth)
      return {false, "totals are not row sums in " + sc.name};
    ++checked;
  }

  auto files = scenario_files();
  auto it = std::find_if(files.begin(), files.end(), [](const Named& n) { return n.name == "three_tasks"; });
  if (it == files.end()) return {false, "three_tasks.scn missing"};
  auto s = sim::parse_scenario(it->text);
  auto r = measure(s, config_for(s));
  std::map<std::string, Ratio> by_task;
  for (const auto& row : r.rows)
    if (row.scope != "system") by_task[row.scope] += row.utilization;
  auto top = std::max_element(by_task.begin(), by_task.end(),
                              [](const auto& a, const auto& b) { return a.second < b.second; });
  std::ostringstream d;
  d << "identities exact on " << checked << " scenarios; utilization";
  for (const auto& [task, u] : by_task) d << " " << task << "=" << format_ratio(u * 100, 3) << "%";
  return {top != by_task.end() && top->first == "t3", d.str()};
}

Outcome insufficient_recording() {
  // Demo with rings that cannot reach back to any checkpoint.
  auto files = scenario_files();
  auto it = std::find_if(files.begin(), files.end(), [](const Named& n) { return n.name == "demo"; });
  if (it == files.end()) return {false, "demo.scn missing"};
  auto s = sim::parse_scenario(it->text);
  auto cfg = RecorderConfig::defaults_for(s, 2);
  cfg.checkpoint_period = 1000;
  cfg.control_capacity = 8;
  bool detected = false;
  try {
    plan_from_trace(record(s, cfg));
  } catch (const Error& e) {
    detected = e.code() == ErrorCode::NoConsistentStart;
  }
  if (!detected) return {false, "undersized demo trace was not rejected with NoConsistentStart"};

  // Sweep of small buffers: every trace is rejected or replays correctly.
  int rejected = 0, replayed = 0, wrong = 0;
  for (const auto& sc : corpus()) {
    auto sx = sim::parse_scenario(sc.text);
    for (std::size_t cap : {2u, 4u, 8u}) {
      auto c = RecorderConfig::defaults_for(sx, cap);
      c.control_capacity = cap * 4;
      c.checkpoint_capacity = 2;
      c.checkpoint_period = 50;
      try {
        auto plan = plan_from_trace(record(sx, c));
        if (replay_and_verify(plan).passed()) ++replayed;
        else ++wrong;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NoConsistentStart || e.code() == ErrorCode::InsufficientOverlap ||
            e.code() == ErrorCode::EmptyBuffer)
          ++rejected;
        else
          ++wrong;
      }
    }
  }
  std::ostringstream d;
  d << "demo rejected; small-buffer sweep: " << rejected << " rejected, " << replayed << " replayed, " << wrong
    << " wrong";
  return {wrong == 0 && rejected > 0, d.str()};
}

Outcome time_travel() {
  std::mt19937_64 rng(7);
  int compared = 0, identical = 0;
  std::string first;
  for (const auto& sc : corpus()) {
    auto s = sim::parse_scenario(sc.text);
    auto plan = plan_from_trace(record(s, config_for(s)));
    std::uniform_int_distribution<Tick> pick(plan.start.t_start, plan.t_fail);
    auto traveller = ReplaySession::load(plan);
    for (int i = 0; i < 10; ++i) {
      auto t = pick(rng);
      traveller.run_to(BreakpointSpec::at_tick(t));
      auto fresh = ReplaySession::load(plan);
      fresh.run_to(BreakpointSpec::at_tick(t));
      ++compared;
      if (traveller.status() != SessionStatus::DivergenceDetected &&
          traveller.serialize_state() == fresh.serialize_state())
        ++identical;
      else if (first.empty())
        first = sc.name + " @" + std::to_string(t);
    }
  }
  std::string d = std::to_string(identical) + "/" + std::to_string(compared) + " tick pairs identical";
  if (!first.empty()) d += "; first difference " + first;
  return {identical == compared, d};
}

}  // namespace

int main() {
  report("replay determinism over the fuzz corpus", replay_determinism);
  report("marker discrimination", marker_discrimination);
  report("pruning oracle", pruning_oracle);
  report("probe transparency", probe_transparency);
  report("benchmark accounting", bench_accounting);
  report("insufficient-recording detection", insufficient_recording);
  report("time-travel consistency", time_travel);
  return failures;
}
