#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dreplay/types.hpp"

namespace dreplay::sim {

enum class Opcode : std::uint8_t {
  Compute,
  Set,
  Send,
  Recv,
  SemWait,
  SemSignal,
  Delay,
  ReadPort,
  Loop,
  If,
  End,
  Fail,
  Halt,
};

enum class BinOp : std::uint8_t { Add, Sub, Mul, And, Or, Xor };
enum class CmpOp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

struct Operand {
  bool is_var = false;
  std::int64_t value = 0;  // literal, or variable index when is_var

  friend bool operator==(const Operand&, const Operand&) = default;
};

/// Left-to-right chain `a op b op c ...`, no precedence.
struct Expr {
  Operand first;
  std::vector<std::pair<BinOp, Operand>> rest;

  friend bool operator==(const Expr&, const Expr&) = default;
};

/// One flattened statement. Its index in TaskProgram::body is the program
/// counter analog. LOOP and IF bodies run up to the matching END.
struct Statement {
  Opcode op = Opcode::Halt;
  std::uint32_t count = 0;   // COMPUTE n, DELAY n, LOOP count
  std::uint32_t var = 0;     // SET / RECV / READ_PORT target, IF operand
  std::uint32_t object = 0;  // queue, semaphore or port index
  Expr expr;                 // SET / SEND value
  CmpOp cmp = CmpOp::Eq;     // IF
  std::int64_t constant = 0; // IF
  std::uint32_t link = 0;    // LOOP/IF: index of END; END: index of opener

  friend bool operator==(const Statement&, const Statement&) = default;
};

struct TaskProgram {
  std::string name;
  int priority = 0;  // lower number = higher priority
  std::uint32_t state_size = 0;
  std::vector<std::uint32_t> init_only_vars;
  std::vector<Statement> body;
  QueueId activation;
  bool replayed = true;

  /// pc value of the implicit activation receive after the last statement.
  std::uint32_t end_pc() const { return static_cast<std::uint32_t>(body.size()); }

  friend bool operator==(const TaskProgram&, const TaskProgram&) = default;
};

}  // namespace dreplay::sim
