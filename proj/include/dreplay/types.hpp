#pragma once

#include <compare>
#include <cstdint>
#include <functional>

namespace dreplay {

/// Logical time. One executed statement tick or one task-to-task switch.
using Tick = std::uint64_t;

template <typename Tag>
struct Id {
  std::uint32_t value = 0;

  constexpr Id() = default;
  constexpr explicit Id(std::uint32_t v) : value(v) {}

  friend constexpr auto operator<=>(Id, Id) = default;
};

struct TaskTag {};
struct QueueTag {};
struct SemTag {};
struct PortTag {};

using TaskId = Id<TaskTag>;
using QueueId = Id<QueueTag>;
using SemId = Id<SemTag>;
using PortId = Id<PortTag>;

}  // namespace dreplay

template <typename Tag>
struct std::hash<dreplay::Id<Tag>> {
  std::size_t operator()(dreplay::Id<Tag> id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
