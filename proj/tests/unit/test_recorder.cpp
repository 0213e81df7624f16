#include "doctest.h"

#include "dreplay/recorder/recorder.hpp"
#include "dreplay/recorder/trace.hpp"
#include "dreplay/sim/scenario.hpp"

using namespace dreplay;

namespace {

Trace run(const std::string& text, std::size_t data_capacity = 64) {
  auto s = sim::parse_scenario(text);
  return record(s, RecorderConfig::defaults_for(s, data_capacity));
}

// high boots, parks on irq at tick 1 and hands the CPU to low at tick 2.
// low: pc0 loop (tick 2), pc1 compute 4 (ticks 3..6), pc2 end (7), pc1 again from tick 8.
const char* kLoopPreempt =
    "limit 60\nqueue irq\nqueue other\n"
    "task high priority 0 activation irq\n  compute 1\nendtask\n"
    "task low priority 5 state 1 activation other\n  loop 3\n    compute 4\n  end\n  halt\nendtask\n"
    "at 9 post irq 1\n";

}  // namespace

TEST_SUITE("recorder") {
  TEST_CASE("first switch has seq 0 and seq is dense") {
    auto t = run(kLoopPreempt);
    REQUIRE(t.control.size() > 3);
    std::uint64_t seq = 0;
    for (const auto& e : t.control) CHECK(e.seq == seq++);
  }

  TEST_CASE("preemption in the second loop iteration has occurrence > 0") {
    auto t = run(kLoopPreempt);
    const ControlFlowEvent* pre = nullptr;
    for (const auto& e : t.control)
      if (e.kind == SwitchKind::Preemption) pre = &e;
    REQUIRE(pre);
    CHECK(pre->tick == 9);
    REQUIRE(pre->marker);
    CHECK(pre->marker->task == TaskId{1});
    CHECK(pre->marker->pc == 1);
    CHECK(pre->marker->occurrence == 5);
  }

  TEST_CASE("control ring of capacity 4 keeps seq 2..5 of 6") {
    auto s = sim::parse_scenario(
        "limit 100\nqueue q\ntask a priority 0 activation q\n  delay 2\n  delay 2\n  halt\nendtask\n");
    auto cfg = RecorderConfig::defaults_for(s);
    cfg.control_capacity = 4;
    auto t = record(s, cfg);
    REQUIRE(t.control.overwritten() == 2);
    REQUIRE(t.control.size() == 4);
    std::uint64_t seq = 2;
    for (const auto& e : t.control) CHECK(e.seq == seq++);
  }

  TEST_CASE("interrupt message is External") {
    auto t = run("limit 40\nqueue q msgsize 2\ntask r priority 0 state 1 activation q\n  compute 1\nendtask\nat 5 post q 33\n");
    int msgs = 0;
    for (const auto& d : t.data[0]) {
      if (d.kind != DataKind::MessageIn) continue;
      ++msgs;
      CHECK(d.origin == Origin::External);
      CHECK(d.bytes.size() == 2);
    }
    CHECK(msgs == 1);
  }

  TEST_CASE("task-to-task message is Internal") {
    auto t = run(
        "limit 40\nqueue boot\nqueue q\n"
        "task tx priority 0 activation boot\n  send q 4\n  halt\nendtask\n"
        "task rx priority 1 state 1 activation q\n  compute 1\nendtask\n");
    bool seen = false;
    for (const auto& d : t.data[1])
      if (d.kind == DataKind::MessageIn) {
        CHECK(d.origin == Origin::Internal);
        seen = true;
      }
    CHECK(seen);
  }

  TEST_CASE("init-only vars are filtered from snapshots") {
    auto t = run("limit 40\nqueue q\ntask t priority 0 state 8 activation q init 0 1\n  compute 1\nendtask\nat 3 post q 1\n");
    bool seen = false;
    for (const auto& d : t.data[0])
      if (d.kind == DataKind::StateSnapshot) {
        CHECK(d.bytes.size() == 6);
        seen = true;
      }
    CHECK(seen);
  }

  TEST_CASE("port reads are indexed densely per instance") {
    auto t = run(
        "limit 40\nqueue q\nport p values 4 5 6 7\n"
        "task t priority 0 state 3 activation q\n  read p v0\n  read p v1\n  read p v2\n  halt\nendtask\n");
    std::vector<std::uint32_t> idx;
    std::vector<std::uint8_t> vals;
    for (const auto& d : t.data[0])
      if (d.kind == DataKind::PeripheralIn) {
        idx.push_back(d.index);
        vals.push_back(d.bytes.at(0));
      }
    CHECK(idx == std::vector<std::uint32_t>{0, 1, 2});
    CHECK(vals == std::vector<std::uint8_t>{4, 5, 6});
  }

  TEST_CASE("checkpoints every K ticks starting at 0") {
    auto s = sim::parse_scenario("limit 1000\nqueue q\ntask t priority 0 activation q\n  loop 100\n    delay 9\n  end\nendtask\n");
    auto cfg = RecorderConfig::defaults_for(s);
    cfg.checkpoint_period = 100;
    cfg.checkpoint_capacity = 20;
    auto t = record(s, cfg);
    REQUIRE(t.checkpoints.size() >= 5);
    Tick prev = 0;
    bool first = true;
    for (const auto& c : t.checkpoints) {
      if (first) CHECK(c.tick == 0);
      else CHECK(c.tick / 100 > prev / 100);
      prev = c.tick;
      first = false;
    }
  }

  TEST_CASE("stats charge base plus bytes/64") {
    auto t = run(kLoopPreempt);
    CostModel cost;
    for (const auto& [key, c] : t.stats.by_task) {
      auto [kind, task] = key;
      CHECK(c.invocations > 0);
      if (is_data_probe(kind) || kind == ProbeKind::Checkpoint) CHECK(c.ticks >= c.invocations);
      else CHECK(c.ticks == c.invocations * cost.base_ticks[static_cast<std::size_t>(kind)]);
    }
  }

  TEST_CASE("bad configs are rejected") {
    auto s = sim::parse_scenario("queue q\ntask t priority 0 activation q\n  halt\nendtask\n");
    auto cfg = RecorderConfig::defaults_for(s);
    cfg.checkpoint_capacity = 1;
    CHECK_THROWS_AS(cfg.validate(s), Error);
    cfg = RecorderConfig::defaults_for(s);
    cfg.checkpoint_period = 0;
    CHECK_THROWS_AS(cfg.validate(s), Error);
    cfg = RecorderConfig::defaults_for(s);
    cfg.data_capacity.clear();
    CHECK_THROWS_AS(cfg.validate(s), Error);
  }
}
