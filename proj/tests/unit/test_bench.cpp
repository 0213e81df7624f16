#include "doctest.h"

#include <map>
#include <sstream>

#include "dreplay/bench/bench.hpp"
#include "dreplay/sim/scenario.hpp"

using namespace dreplay;

namespace {

sim::Scenario three_tasks() {
  std::ostringstream s;
  s << "limit 4000\nqueue slow\nqueue fast\nqueue heavy\n"
    << "task t1 priority 2 state 2 activation slow\n  set v0 = v0 + 1\nendtask\n"
    << "task t2 priority 1 state 2 activation fast\n  set v0 = v0 + 1\nendtask\n"
    << "task t3 priority 0 state 96 activation heavy\n  set v0 = v0 + 1\n  set v95 = v0\nendtask\n";
  std::map<int, const char*> posts;
  for (int t = 10; t < 4000; t += 10) {
    if (t % 400 == 0) posts[t + 5] = "slow";
    posts[t] = t % 20 == 0 ? "fast" : "heavy";
  }
  for (const auto& [t, q] : posts) s << "at " << t << " post " << q << " 1\n";
  return sim::parse_scenario(s.str());
}

std::map<std::string, Ratio> utilization_by_task(const BenchReport& r) {
  std::map<std::string, Ratio> u;
  for (const auto& row : r.rows) u[row.scope] += row.utilization;
  return u;
}

void check_identities(const BenchReport& r) {
  Ratio freq, util, bw;
  for (const auto& row : r.rows) {
    CAPTURE(row.probe);
    CAPTURE(row.scope);
    REQUIRE(row.invocations > 0);
    CHECK(row.utilization == Ratio(row.invocations) * row.ticks_per_invocation / Ratio(r.total_ticks));
    CHECK(row.utilization == Ratio(row.probe_ticks) / Ratio(r.total_ticks));
    CHECK(row.bandwidth == row.frequency * row.bytes_per_function / 1000);
    CHECK(row.frequency == Ratio(row.invocations * 1000) / Ratio(r.total_ticks));
    freq += row.frequency;
    util += row.utilization;
    bw += row.bandwidth;
  }
  CHECK(r.totals.frequency == freq);
  CHECK(r.totals.utilization == util);
  CHECK(r.totals.bandwidth == bw);
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("frequency 10 per 1000, 64 bytes, 2 ticks over 10000 ticks is 2%") {
    ProbeStats st;
    for (int i = 0; i < 100; ++i) st.add(ProbeKind::StateSnapshot, 0, 64, 2);
    auto s = sim::parse_scenario("limit 10000\nqueue q\ntask t priority 0 state 1 activation q\n  halt\nendtask\n");
    auto r = bench_from_stats(st, 10000, s);
    REQUIRE(r.rows.size() == 1);
    const auto& row = r.rows[0];
    CHECK(row.frequency == Ratio(10));
    CHECK(row.bytes_per_function == Ratio(64));
    CHECK(row.ticks_per_invocation == Ratio(2));
    CHECK(row.utilization == Ratio(2, 100));
    CHECK(row.bandwidth == Ratio(64, 100));
    CHECK(format_ratio(row.utilization * 100, 4) == "2.0000");
    check_identities(r);
  }

  TEST_CASE("identities hold on a recorded run") {
    auto s = three_tasks();
    auto r = measure(s, RecorderConfig::defaults_for(s));
    CHECK(r.total_ticks > 3900);
    check_identities(r);
    Ratio queue_bw;
    for (const auto& row : r.queue_rows) queue_bw += row.bandwidth;
    Ratio msg_bw;
    for (const auto& row : r.rows)
      if (row.probe == "message_in") msg_bw += row.bandwidth;
    CHECK(queue_bw == msg_bw);
  }

  TEST_CASE("high frequency and large state ranks first") {
    auto s = three_tasks();
    auto r = measure(s, RecorderConfig::defaults_for(s));
    auto u = utilization_by_task(r);
    REQUIRE(u.count("t3"));
    CHECK(u["t3"] > u["t2"]);
    CHECK(u["t2"] > u["t1"]);
    std::string top;
    Ratio best(-1);
    for (const auto& [scope, v] : u)
      if (scope != "system" && v > best) best = v, top = scope;
    CHECK(top == "t3");
  }

  TEST_CASE("no data probes leaves only control-flow rows") {
    ProbeStats st;
    for (int i = 0; i < 5; ++i) st.add(ProbeKind::TaskSwitch, 0, 8, 1);
    st.add(ProbeKind::BlockingCall, 0, 0, 1);
    auto s = sim::parse_scenario("limit 100\nqueue q\ntask t priority 0 state 1 activation q\n  halt\nendtask\n");
    auto r = bench_from_stats(st, 100, s);
    REQUIRE(r.rows.size() == 2);
    for (const auto& row : r.rows) CHECK(row.probe != "state_snapshot");
    CHECK(r.queue_rows.empty());
    CHECK(format_csv(r).find("state_snapshot") == std::string::npos);
  }

  TEST_CASE("doubling logged bytes doubles bandwidth") {
    ProbeStats a, b;
    for (int i = 0; i < 7; ++i) {
      a.add(ProbeKind::StateSnapshot, 0, 40, 1);
      b.add(ProbeKind::StateSnapshot, 0, 80, 2);
    }
    auto s = sim::parse_scenario("limit 100\nqueue q\ntask t priority 0 state 1 activation q\n  halt\nendtask\n");
    auto ra = bench_from_stats(a, 300, s);
    auto rb = bench_from_stats(b, 300, s);
    CHECK(rb.rows[0].bandwidth == ra.rows[0].bandwidth * 2);
  }

  TEST_CASE("larger state logs more per tick") {
    auto small = sim::parse_scenario("limit 500\nqueue q\ntask t priority 0 state 8 activation q\n  compute 1\nendtask\n"
                                     "at 10 post q 1\nat 50 post q 1\n");
    auto big = sim::parse_scenario("limit 500\nqueue q\ntask t priority 0 state 16 activation q\n  compute 1\nendtask\n"
                                   "at 10 post q 1\nat 50 post q 1\n");
    auto bw = [](const sim::Scenario& s) {
      for (const auto& row : measure(s, RecorderConfig::defaults_for(s)).rows)
        if (row.probe == "state_snapshot") return row.bandwidth;
      return Ratio(0);
    };
    CHECK(bw(big) > bw(small));
  }

  TEST_CASE("format_ratio rounds half up") {
    CHECK(format_ratio(Ratio(1, 3), 3) == "0.333");
    CHECK(format_ratio(Ratio(2, 3), 3) == "0.667");
    CHECK(format_ratio(Ratio(5, 1000), 2) == "0.01");
    CHECK(format_ratio(Ratio(-3, 2), 0) == "-2");
    CHECK(format_ratio(Ratio(7), 2) == "7.00");
  }
}
