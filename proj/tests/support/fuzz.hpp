#pragma once

#include <cstdint>
#include <string>

namespace dreplay::testing {

struct FuzzOptions {
  int min_tasks = 3;
  int max_tasks = 10;
  int max_queues = 5;
  int max_semaphores = 3;
  int max_interrupts = 20;
  bool allow_unreplayed = true;
  bool allow_fail = true;
};

/// Scenario text drawn from `seed`; always parses and validates.
std::string generate_scenario(std::uint64_t seed, const FuzzOptions& opts = {});

}  // namespace dreplay::testing
