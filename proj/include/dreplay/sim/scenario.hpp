#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dreplay/sim/program.hpp"
#include "dreplay/types.hpp"

namespace dreplay::sim {

struct QueueDecl {
  std::string name;
  std::uint32_t capacity = 1;
  std::uint32_t msg_size = 1;

  friend bool operator==(const QueueDecl&, const QueueDecl&) = default;
};

struct SemaphoreDecl {
  std::string name;
  std::uint32_t initial = 0;

  friend bool operator==(const SemaphoreDecl&, const SemaphoreDecl&) = default;
};

/// Peripheral input stream: a cyclic list of literal values, or values drawn
/// from the scenario seed.
struct PortDecl {
  std::string name;
  bool random = false;
  std::vector<std::uint8_t> values;

  friend bool operator==(const PortDecl&, const PortDecl&) = default;
};

struct InterruptDecl {
  Tick tick = 0;
  QueueId queue;
  bool random = false;
  std::uint8_t value = 0;

  friend bool operator==(const InterruptDecl&, const InterruptDecl&) = default;
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 0;
  Tick run_limit = 10000;
  std::vector<QueueDecl> queues;
  std::vector<SemaphoreDecl> semaphores;
  std::vector<PortDecl> ports;
  std::vector<TaskProgram> tasks;
  std::vector<InterruptDecl> interrupts;

  const TaskProgram& task(TaskId id) const { return tasks.at(id.value); }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parses the scenario text format (see docs/formats.md). Throws ParseError.
Scenario parse_scenario(std::string_view text);

/// Canonical text form; parse_scenario(serialize_scenario(s)) == s.
std::string serialize_scenario(const Scenario& s);

/// FNV-1a over the canonical text.
std::uint64_t scenario_hash(const Scenario& s);

/// Re-checks every structural invariant. Throws ParseError (line 0) on failure.
void validate(const Scenario& s);

/// Seeded value sources shared by the kernel and the scenario generator.
std::uint8_t interrupt_value(const Scenario& s, std::size_t index);
std::uint8_t port_value(const Scenario& s, PortId port, std::uint64_t access);
std::vector<std::uint8_t> make_payload(std::uint32_t msg_size, std::int64_t value);

}  // namespace dreplay::sim
