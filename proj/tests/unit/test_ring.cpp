#include "doctest.h"

#include "dreplay/recorder/ring_buffer.hpp"

using namespace dreplay;

namespace {
struct Entry {
  Tick tick;
  int seq;
  friend bool operator==(const Entry&, const Entry&) = default;
};
}  // namespace

TEST_SUITE("ring") {
  TEST_CASE("capacity 4 receiving 6 events keeps 2..5") {
    RingBuffer<Entry> r(4);
    for (int i = 0; i < 6; ++i) r.push({Tick(i * 10), i});
    REQUIRE(r.size() == 4);
    CHECK(r.overwritten() == 2);
    int expect = 2;
    for (const auto& e : r) CHECK(e.seq == expect++);
    CHECK(r.newest_discarded() == Tick(10));
  }

  TEST_CASE("push returns the dropped entry") {
    RingBuffer<Entry> r(1);
    CHECK_FALSE(r.push({1, 0}));
    auto d = r.push({2, 1});
    REQUIRE(d);
    CHECK(d->seq == 0);
  }

  TEST_CASE("completeness follows the newest discarded tick") {
    RingBuffer<Entry> r(2);
    CHECK(r.never_written());
    r.push({5, 0});
    r.push({5, 1});
    r.push({7, 2});
    CHECK_FALSE(r.complete_from(5));
    CHECK(r.complete_from(6));
    CHECK(r.discard_before(7) == 1);
    CHECK(r.complete_from(6));
    CHECK_FALSE(r.complete_from(5));
    CHECK_FALSE(r.never_written());
  }

  TEST_CASE("zero capacity is rejected") { CHECK_THROWS(RingBuffer<Entry>(0)); }
}
