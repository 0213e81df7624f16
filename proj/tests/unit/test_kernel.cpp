#include "doctest.h"

#include <optional>

#include "dreplay/sim/kernel.hpp"
#include "dreplay/sim/scenario.hpp"

using namespace dreplay;
using namespace dreplay::sim;

namespace {

struct Capture : KernelHooks {
  Tick at;
  std::optional<Bytes> blob;
  std::size_t switches_before = 0;
  std::size_t switches = 0;
  explicit Capture(Tick t) : at(t) {}
  void on_boundary(const Kernel& k) override {
    if (!blob && k.clock() >= at) {
      blob = k.checkpoint();
      switches_before = switches;
    }
  }
  void on_task_switch(const SwitchRecord&, const Kernel&) override { ++switches; }
};

const char* kPipeline =
    "seed 3\nlimit 800\n"
    "queue in capacity 2 msgsize 2\nqueue mid capacity 1 msgsize 1\nsemaphore m count 1\nport p random\n"
    "task a priority 1 state 3 activation in\n  read p v0\n  sem_wait m\n  compute 3\n  sem_signal m\n"
    "  send mid v0 + v1\nendtask\n"
    "task b priority 2 state 2 activation mid\n  loop 3\n    compute 2\n    set v1 = v1 + v0\n  end\nendtask\n"
    "task c priority 0 state 1 activation in\n  loop 9\n    delay 31\n    sem_wait m\n    compute 1\n"
    "    sem_signal m\n  end\nendtask\n"
    "at 4 post in 1\nat 50 post in random\nat 51 post in random\nat 52 post in random\nat 300 post in 9\n";

}  // namespace

TEST_SUITE("kernel") {
  TEST_CASE("compute 5 then halt ends at tick 6") {
    auto s = parse_scenario("queue q\ntask t priority 0 activation q\n  compute 5\n  halt\nendtask\n");
    auto r = Kernel(s).run();
    CHECK(r.end_tick == 6);
    CHECK(r.cause == Termination::AllHalted);
  }

  TEST_CASE("equal priority: declared first runs first") {
    auto s = parse_scenario(
        "queue q\ntask a priority 3 activation q\n  halt\nendtask\ntask b priority 3 activation q\n  halt\nendtask\n");
    auto r = Kernel(s).run();
    REQUIRE(!r.switches.empty());
    CHECK(r.switches[0].to == TaskId{0});
  }

  TEST_CASE("interrupt activates a high-priority task mid-compute") {
    auto s = parse_scenario(
        "limit 100\nqueue irq\nqueue other\n"
        "task high priority 0 activation irq\n  compute 1\nendtask\n"
        "task low priority 5 activation other\n  compute 50\n  halt\nendtask\n"
        "at 10 post irq 1\n");
    auto r = Kernel(s).run();
    bool found = false;
    for (const auto& sw : r.switches) {
      if (sw.kind != SwitchKind::Preemption) continue;
      CHECK(sw.tick == 10);
      CHECK(sw.from == TaskId{1});
      CHECK(sw.to == TaskId{0});
      found = true;
    }
    CHECK(found);
  }

  TEST_CASE("send to a full queue blocks the sender") {
    auto s = parse_scenario(
        "limit 50\nqueue boot\nqueue q capacity 1\n"
        "task tx priority 0 activation boot\n  send q 1\n  send q 2\n  halt\nendtask\n"
        "task rx priority 1 activation q\n  delay 5\nendtask\n");
    auto r = Kernel(s).run();
    REQUIRE(!r.switches.empty());
    const auto& first_out = r.switches[1];
    CHECK(first_out.from == TaskId{0});
    CHECK(first_out.kind == SwitchKind::BlockingCall);
    CHECK(first_out.primitive == Primitive::Send);
  }

  TEST_CASE("recv on an empty queue blocks the receiver") {
    auto s = parse_scenario("limit 20\nqueue boot\nqueue q\ntask t priority 0 state 1 activation boot\n  recv q v0\nendtask\n");
    auto r = Kernel(s).run();
    REQUIRE(r.switches.size() == 2);
    CHECK(r.switches[1].primitive == Primitive::Recv);
    CHECK(r.cause == Termination::Deadlocked);
  }

  TEST_CASE("semaphores: no block at count 1, FIFO wakeup at count 0") {
    auto s = parse_scenario(
        "limit 200\nqueue boot\nsemaphore one count 1\nsemaphore zero count 0\n"
        "task a priority 1 activation boot\n  sem_wait one\n  sem_wait zero\n  halt\nendtask\n"
        "task b priority 1 activation boot\n  sem_wait zero\n  halt\nendtask\n"
        "task c priority 2 activation boot\n  sem_signal zero\n  halt\nendtask\n");
    auto r = Kernel(s).run();
    std::vector<SwitchRecord> blocks;
    for (const auto& sw : r.switches)
      if (sw.kind == SwitchKind::BlockingCall) blocks.push_back(sw);
    // a blocks on `zero` only; `one` was available.
    REQUIRE(blocks.size() >= 2);
    CHECK(blocks[0].from == TaskId{0});
    CHECK(blocks[0].primitive == Primitive::SemWait);
    CHECK(blocks[0].object == 1);
    CHECK(blocks[1].from == TaskId{1});
    // c's single signal wakes a, the first waiter.
    bool a_halted = false, b_halted = false;
    for (const auto& sw : r.switches) {
      if (sw.kind != SwitchKind::TaskExit) continue;
      a_halted |= sw.from == TaskId{0};
      b_halted |= sw.from == TaskId{1};
    }
    CHECK(a_halted);
    CHECK_FALSE(b_halted);
  }

  TEST_CASE("two blocked receivers: the first to block wakes") {
    auto s = parse_scenario(
        "limit 60\nqueue q\n"
        "task r1 priority 1 activation q\n  compute 1\nendtask\n"
        "task r2 priority 1 activation q\n  compute 1\nendtask\n"
        "at 20 post q 7\n");
    auto r = Kernel(s).run();
    std::optional<SwitchRecord> woke;
    for (const auto& sw : r.switches)
      if (sw.tick >= 20 && sw.to) {
        woke = sw;
        break;
      }
    REQUIRE(woke);
    CHECK(woke->to == TaskId{0});
    CHECK(woke->kind == SwitchKind::InterruptDispatch);
  }

  TEST_CASE("restore at tick 0 reproduces the run") {
    auto s = parse_scenario(kPipeline);
    auto fresh = Kernel(s).run();
    auto again = Kernel::restore(s, Kernel(s).checkpoint()).run();
    CHECK(again.switches == fresh.switches);
    CHECK(again.final_checksums == fresh.final_checksums);
  }

  TEST_CASE("restore mid-run reaches the same end") {
    auto s = parse_scenario(kPipeline);
    for (Tick t : {37u, 120u, 250u, 320u}) {
      Capture cap(t);
      auto original = Kernel(s).run(&cap);
      REQUIRE(cap.blob);
      auto resumed = Kernel::restore(s, *cap.blob).run();
      CHECK(resumed.end_tick == original.end_tick);
      CHECK(resumed.cause == original.cause);
      CHECK(resumed.final_checksums == original.final_checksums);
      std::vector<SwitchRecord> tail(original.switches.begin() + static_cast<std::ptrdiff_t>(cap.switches_before),
                                     original.switches.end());
      CHECK(resumed.switches == tail);
    }
  }

  TEST_CASE("checkpoint round-trips byte-identically") {
    auto s = parse_scenario(kPipeline);
    Capture cap(200);
    Kernel(s).run(&cap);
    REQUIRE(cap.blob);
    CHECK(Kernel::restore(s, *cap.blob).checkpoint() == *cap.blob);
  }
}
