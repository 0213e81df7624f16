#include "doctest.h"

#include <filesystem>

#include "dreplay/historian/plan.hpp"
#include "dreplay/recorder/recorder.hpp"
#include "dreplay/replay/session.hpp"
#include "dreplay/sim/scenario.hpp"
#include "fuzz.hpp"

using namespace dreplay;

namespace {

Trace run(const std::string& text, Tick period = 500, std::size_t data_capacity = 1024) {
  auto s = sim::parse_scenario(text);
  auto cfg = RecorderConfig::defaults_for(s, data_capacity);
  cfg.checkpoint_period = period;
  return record(s, cfg);
}

}  // namespace

TEST_SUITE("plan") {
  TEST_CASE("all-internal run has no injections") {
    auto t = run(
        "limit 200\nqueue boot\nqueue q\n"
        "task a priority 1 state 1 activation boot\n  loop 5\n    send q v0\n    set v0 = v0 + 1\n    delay 3\n  end\n  halt\nendtask\n"
        "task b priority 0 state 1 activation q\n  compute 1\nendtask\n");
    auto p = plan_from_trace(t);
    CHECK(p.injections.empty());
    CHECK(p.port_values.empty());
    CHECK(p.verification.size() == 5);
  }

  TEST_CASE("two interrupts in the window give two External injections") {
    auto t = run("limit 120\nqueue q msgsize 2\ntask r priority 0 state 2 activation q\n  compute 2\nendtask\n"
                 "at 30 post q 5\nat 70 post q random\n");
    auto p = plan_from_trace(t);
    CHECK(p.injections.size() == 2);
    for (const auto& [key, rec] : p.injections) {
      CHECK(rec.origin == Origin::External);
      CHECK(rec.index == 0);
    }
    CHECK(p.verification.empty());
  }

  TEST_CASE("window cut mid-instance excludes earlier records and still replays") {
    // b's instances run for ~60 ticks, so the checkpoint at 100 lands inside one.
    auto text =
        "limit 400\nqueue q capacity 4\nport p values 1 2 3\n"
        "task b priority 1 state 3 activation q\n  read p v0\n  loop 6\n    delay 8\n    read p v1\n  end\nendtask\n"
        "at 10 post q 1\nat 80 post q 2\nat 150 post q 3\nat 230 post q 4\n";
    auto s = sim::parse_scenario(text);
    auto cfg = RecorderConfig::defaults_for(s, 9);
    cfg.checkpoint_period = 100;
    auto t = record(s, cfg);
    auto p = plan_from_trace(t);
    REQUIRE(p.start.t_start > 0);
    auto inst = p.start.checkpoint.task_instances[0];
    for (const auto& [key, rec] : p.port_values) CHECK(rec.tick >= p.start.t_start);
    bool straddles = false;
    for (const auto& [key, rec] : p.port_values) straddles |= key.instance == inst;
    CHECK(straddles);
    CHECK(replay_and_verify(p).passed());
  }

  TEST_CASE("forced switches cover [t_start, t_fail] densely") {
    auto t = run(testing::generate_scenario(5), 100);
    auto p = plan_from_trace(t);
    REQUIRE(!p.forced.empty());
    CHECK(p.forced.front().tick >= p.start.t_start);
    CHECK(p.forced.back().tick <= p.t_fail);
    for (std::size_t i = 1; i < p.forced.size(); ++i) CHECK(p.forced[i].seq == p.forced[i - 1].seq + 1);
    CHECK(p.t_fail == t.end_tick);
  }

  TEST_CASE("missing control event is GapInControlFlow") {
    auto t = run(testing::generate_scenario(5), 100);
    auto w = compute_window(t);
    auto start = find_start(t, w);
    auto& ev = t.control.mutable_entries();
    REQUIRE(ev.size() > 10);
    ev.erase(ev.end() - 3);
    try {
      build_plan(t, w, start);
      FAIL("expected GapInControlFlow");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::GapInControlFlow);
    }
  }

  TEST_CASE("plan codec round-trips and rejects corruption") {
    auto p = plan_from_trace(run(testing::generate_scenario(7), 100));
    auto bytes = encode_plan(p);
    CHECK(decode_plan(bytes) == p);
    auto bad = bytes;
    bad[3] ^= 0x40;
    CHECK_THROWS_AS(decode_plan(bad), Error);
    CHECK_THROWS_AS(decode_plan(Bytes(bytes.begin(), bytes.begin() + 20)), Error);
    auto path = (std::filesystem::temp_directory_path() / "dreplay-unit.plan").string();
    save_plan(path, p);
    CHECK(load_plan(path) == p);
    std::filesystem::remove(path);
  }
}
