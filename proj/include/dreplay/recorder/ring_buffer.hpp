#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>

#include "dreplay/types.hpp"

namespace dreplay {

/// Fixed-capacity cyclic FIFO. When full, a push discards exactly the
/// oldest entry. Entries carry a `tick` member so the ring can report how
/// far back its history is complete.
template <typename T>
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity = 1) : capacity_(capacity) {
    if (capacity_ < 1) throw std::invalid_argument("ring capacity must be >= 1");
  }

  RingBuffer(std::size_t capacity, std::uint64_t overwritten, std::optional<Tick> newest_discarded, std::deque<T> entries)
      : capacity_(capacity), overwritten_(overwritten), newest_discarded_(newest_discarded), entries_(std::move(entries)) {
    if (capacity_ < 1) throw std::invalid_argument("ring capacity must be >= 1");
    if (entries_.size() > capacity_) throw std::invalid_argument("ring holds more entries than its capacity");
  }

  /// Returns the discarded entry, if any.
  std::optional<T> push(T value) {
    std::optional<T> dropped;
    if (entries_.size() == capacity_) {
      dropped = std::move(entries_.front());
      entries_.pop_front();
      ++overwritten_;
      note_discard(dropped->tick);
    }
    entries_.push_back(std::move(value));
    return dropped;
  }

  /// Removes every entry older than `tick`. Returns how many were removed.
  std::size_t discard_before(Tick tick) {
    std::size_t n = 0;
    while (!entries_.empty() && entries_.front().tick < tick) {
      note_discard(entries_.front().tick);
      entries_.pop_front();
      ++n;
    }
    return n;
  }

  /// True if every entry with tick >= `tick` ever pushed is still retained.
  bool complete_from(Tick tick) const { return !newest_discarded_ || *newest_discarded_ < tick; }

  /// True if nothing was ever pushed.
  bool never_written() const { return entries_.empty() && !newest_discarded_; }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::uint64_t overwritten() const { return overwritten_; }
  std::optional<Tick> newest_discarded() const { return newest_discarded_; }

  const std::deque<T>& entries() const { return entries_; }
  std::deque<T>& mutable_entries() { return entries_; }
  const T& front() const { return entries_.front(); }
  const T& back() const { return entries_.back(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  friend bool operator==(const RingBuffer&, const RingBuffer&) = default;

 private:
  void note_discard(Tick t) { newest_discarded_ = newest_discarded_ ? std::max(*newest_discarded_, t) : t; }

  std::size_t capacity_;
  std::uint64_t overwritten_ = 0;
  std::optional<Tick> newest_discarded_;
  std::deque<T> entries_;
};

}  // namespace dreplay
