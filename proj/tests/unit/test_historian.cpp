#include "doctest.h"

#include <random>

#include "dreplay/historian/historian.hpp"
#include "dreplay/recorder/recorder.hpp"
#include "dreplay/sim/scenario.hpp"

using namespace dreplay;

namespace {

struct Entry {
  Tick tick;
  friend bool operator==(const Entry&, const Entry&) = default;
};

RingBuffer<Entry> ring_of(std::initializer_list<Tick> ticks, std::size_t capacity = 64) {
  RingBuffer<Entry> r(capacity);
  for (auto t : ticks) r.push({t});
  return r;
}

ConsistentWindow window_of(const std::vector<RingBuffer<Entry>>& rings, Tick t_fail) {
  std::vector<BufferExtent> ext;
  std::vector<std::string> names;
  for (const auto& r : rings) {
    ext.push_back(extent_of(r));
    names.push_back("b" + std::to_string(names.size()));
  }
  return compute_window(ext, names, t_fail);
}

// Long-running three-task scenario used for checkpoint-ring experiments.
const char* kLong =
    "limit 1300\nqueue a capacity 2\nqueue b capacity 2\n"
    "task p priority 0 state 2 activation a\n  loop 200\n    delay 7\n    send b v0\n    set v0 = v0 + 1\n  end\nendtask\n"
    "task c priority 1 state 2 activation b\n  compute 2\n  set v1 = v1 + v0\nendtask\n";

}  // namespace

TEST_SUITE("historian") {
  TEST_CASE("single buffer defines its own scope") {
    std::vector<RingBuffer<Entry>> rings{ring_of({5, 8, 12, 20})};
    auto w = window_of(rings, 20);
    CHECK(w.t_min == 5);
    CHECK(rings[0].discard_before(w.t_min) == 0);
  }

  TEST_CASE("oldest ticks 10, 50, 30 give t_min 50") {
    std::vector<RingBuffer<Entry>> rings{ring_of({10, 40, 70}), ring_of({50, 60, 90}), ring_of({30, 55, 80})};
    auto w = window_of(rings, 100);
    CHECK(w.t_min == 50);
    for (auto& r : rings) r.discard_before(w.t_min);
    for (const auto& r : rings)
      for (const auto& e : r) CHECK(e.tick >= 50);
    CHECK(rings[0].size() == 1);
    CHECK(rings[1].size() == 3);
    CHECK(rings[2].size() == 2);
  }

  TEST_CASE("disjoint buffers: valid iff t_min <= t_fail") {
    std::vector<RingBuffer<Entry>> rings{ring_of({0, 5, 10}), ring_of({50, 55, 60})};
    CHECK(window_of(rings, 60).t_min == 50);
    try {
      window_of(rings, 40);
      FAIL("expected InsufficientOverlap");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InsufficientOverlap);
    }
  }

  TEST_CASE("never-written buffer is EmptyBuffer") {
    std::vector<RingBuffer<Entry>> rings{ring_of({1, 2}), RingBuffer<Entry>(4)};
    try {
      window_of(rings, 10);
      FAIL("expected EmptyBuffer");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyBuffer);
    }
  }

  TEST_CASE("a buffer emptied by pruning still bounds the window") {
    auto r = ring_of({3, 4});
    r.discard_before(10);
    CHECK(lower_bound_of(extent_of(r), "r") == 5);
  }

  TEST_CASE("random configurations match a brute-force scan") {
    std::mt19937_64 rng(42);
    for (int round = 0; round < 300; ++round) {
      int n = 1 + static_cast<int>(rng() % 5);
      std::vector<RingBuffer<Entry>> rings;
      std::vector<std::vector<Tick>> retained;
      Tick t_fail = 0;
      for (int b = 0; b < n; ++b) {
        std::size_t cap = 1 + rng() % 20;
        std::size_t pushes = 1 + rng() % 50;
        std::vector<Tick> all;
        Tick t = rng() % 30;
        for (std::size_t i = 0; i < pushes; ++i) {
          all.push_back(t);
          t += rng() % 6;
        }
        RingBuffer<Entry> r(cap);
        for (auto x : all) r.push({x});
        rings.push_back(r);
        retained.emplace_back(all.end() - static_cast<std::ptrdiff_t>(std::min(cap, all.size())), all.end());
        t_fail = std::max(t_fail, all.back());
      }
      // Smallest t at which every buffer already holds an entry.
      Tick brute = 0;
      while (true) {
        bool ok = true;
        for (const auto& v : retained) ok = ok && v.front() <= brute;
        if (ok) break;
        ++brute;
      }
      auto w = window_of(rings, t_fail);
      CHECK(w.t_min == brute);
      for (std::size_t b = 0; b < rings.size(); ++b) {
        rings[b].discard_before(w.t_min);
        std::vector<Tick> kept, expect;
        for (const auto& e : rings[b]) kept.push_back(e.tick);
        for (auto x : retained[b])
          if (x >= brute) expect.push_back(x);
        CHECK(kept == expect);
      }
    }
  }

  TEST_CASE("prune is idempotent") {
    auto s = sim::parse_scenario(kLong);
    auto cfg = RecorderConfig::defaults_for(s, 40);
    cfg.checkpoint_period = 100;
    auto t = record(s, cfg);
    auto first = prune(t);
    auto start = find_start(t, first.window);
    auto once = t;
    auto second = prune(t);
    CHECK(second.window == first.window);
    for (const auto& b : second.buffers) CHECK(b.discarded == 0);
    CHECK(t == once);
    CHECK(find_start(t, second.window) == start);
  }

  TEST_CASE("checkpoints at 0, 500, 1000 with t_min 600 start at 1000") {
    auto s = sim::parse_scenario(kLong);
    auto cfg = RecorderConfig::defaults_for(s);
    cfg.checkpoint_period = 500;
    auto t = record(s, cfg);
    std::vector<Tick> cps;
    for (const auto& c : t.checkpoints) cps.push_back(c.tick);
    REQUIRE(cps == std::vector<Tick>{0, 500, 1000});
    CHECK(find_start(t, {600, t.end_tick}).t_start == 1000);
    CHECK(find_start(t, {500, t.end_tick}).t_start == 500);
    CHECK(find_start(t, {0, t.end_tick}).t_start == 0);
  }

  TEST_CASE("start snapshot is the governing activation") {
    auto s = sim::parse_scenario(kLong);
    auto cfg = RecorderConfig::defaults_for(s);
    auto t = record(s, cfg);
    auto st = find_start(t, {600, t.end_tick});
    REQUIRE(st.snapshots.size() == 2);
    REQUIRE(st.snapshots[1]);
    CHECK(st.snapshots[1]->instance == st.checkpoint.task_instances[1]);
    CHECK(st.snapshots[1]->tick <= st.t_start);
  }

  TEST_CASE("control ring overwritten past the last checkpoint is NoConsistentStart") {
    auto s = sim::parse_scenario(kLong);
    auto cfg = RecorderConfig::defaults_for(s);
    cfg.checkpoint_period = 500;
    cfg.control_capacity = 16;
    auto t = record(s, cfg);
    auto w = compute_window(t);
    try {
      find_start(t, w);
      FAIL("expected NoConsistentStart");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoConsistentStart);
    }
  }
}
