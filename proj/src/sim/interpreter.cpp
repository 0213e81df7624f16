#include "dreplay/sim/interpreter.hpp"

#include <algorithm>

namespace dreplay::sim {
namespace {

std::int64_t value_of(const Operand& o, const Bytes& state) {
  return o.is_var ? static_cast<std::int64_t>(state.at(static_cast<std::size_t>(o.value))) : o.value;
}

bool compare(CmpOp op, std::int64_t a, std::int64_t b) {
  switch (op) {
    case CmpOp::Eq: return a == b;
    case CmpOp::Ne: return a != b;
    case CmpOp::Lt: return a < b;
    case CmpOp::Le: return a <= b;
    case CmpOp::Gt: return a > b;
    case CmpOp::Ge: return a >= b;
  }
  return false;
}

}  // namespace

std::int64_t evaluate(const Expr& e, const Bytes& state) {
  auto acc = value_of(e.first, state);
  for (const auto& [op, rhs] : e.rest) {
    auto v = value_of(rhs, state);
    switch (op) {
      case BinOp::Add: acc += v; break;
      case BinOp::Sub: acc -= v; break;
      case BinOp::Mul: acc *= v; break;
      case BinOp::And: acc &= v; break;
      case BinOp::Or: acc |= v; break;
      case BinOp::Xor: acc ^= v; break;
    }
    acc &= 0xFFFFFFFF;  // keep chains bounded; stores truncate to a byte anyway
  }
  return acc;
}

bool is_activation_receive(const TaskControlBlock& tcb, const TaskProgram& program, QueueId queue) {
  return queue == program.activation && (tcb.pc == program.end_pc() || program.body[tcb.pc].op == Opcode::Recv);
}

ReceiveSlot receive_slot(const TaskControlBlock& tcb, const TaskProgram& program, QueueId queue) {
  if (is_activation_receive(tcb, program, queue)) return {tcb.instance + 1, 0, true};
  return {tcb.instance, tcb.recv_index, false};
}

bool deliver_message(TaskControlBlock& tcb, const TaskProgram& program, QueueId queue, const Bytes& payload) {
  bool at_end = tcb.pc == program.end_pc();
  if (!at_end && !payload.empty()) tcb.state_bytes.at(program.body[tcb.pc].var) = payload.front();
  tcb.pending = Primitive::None;
  if (is_activation_receive(tcb, program, queue)) {
    tcb.instance += 1;
    std::fill(tcb.visits.begin(), tcb.visits.end(), 0);
    tcb.instr_in_instance = 0;
    tcb.recv_index = 1;
    tcb.port_index = 0;
    tcb.pc = at_end ? 0 : tcb.pc + 1;
    return true;
  }
  tcb.recv_index += 1;
  tcb.pc += 1;
  return false;
}

void complete_blocked(TaskControlBlock& tcb) {
  tcb.pending = Primitive::None;
  tcb.pending_payload.clear();
  tcb.pc += 1;
}

VisitOutcome execute_visit(TaskControlBlock& tcb, TaskId task, const TaskProgram& program, const Scenario& scenario,
                           Primitives& prims) {
  const auto pc = tcb.pc;
  tcb.visits.at(pc) += 1;
  tcb.instr_in_instance += 1;

  if (pc == program.end_pc()) {
    auto msg = prims.recv(task, program.activation);
    if (!msg) return VisitOutcome::Blocked;
    if (deliver_message(tcb, program, program.activation, *msg)) prims.activated(task);
    return VisitOutcome::Executed;
  }

  const auto& st = program.body[pc];
  switch (st.op) {
    case Opcode::Compute:
      if (tcb.compute_left == 0) tcb.compute_left = st.count;
      tcb.compute_left -= 1;
      if (tcb.compute_left == 0) tcb.pc += 1;
      return VisitOutcome::Executed;

    case Opcode::Set:
      tcb.state_bytes.at(st.var) = static_cast<std::uint8_t>(evaluate(st.expr, tcb.state_bytes));
      tcb.pc += 1;
      return VisitOutcome::Executed;

    case Opcode::Send: {
      auto queue = QueueId{st.object};
      auto payload = make_payload(scenario.queues.at(st.object).msg_size, evaluate(st.expr, tcb.state_bytes));
      if (!prims.send(task, queue, std::move(payload))) return VisitOutcome::Blocked;
      tcb.pc += 1;
      return VisitOutcome::Executed;
    }

    case Opcode::Recv: {
      auto queue = QueueId{st.object};
      auto msg = prims.recv(task, queue);
      if (!msg) return VisitOutcome::Blocked;
      if (deliver_message(tcb, program, queue, *msg)) prims.activated(task);
      return VisitOutcome::Executed;
    }

    case Opcode::SemWait:
      if (!prims.sem_wait(task, SemId{st.object})) return VisitOutcome::Blocked;
      tcb.pc += 1;
      return VisitOutcome::Executed;

    case Opcode::SemSignal:
      prims.sem_signal(task, SemId{st.object});
      tcb.pc += 1;
      return VisitOutcome::Executed;

    case Opcode::Delay:
      prims.delay(task, st.count);
      return VisitOutcome::Blocked;

    case Opcode::ReadPort:
      tcb.state_bytes.at(st.var) = prims.read_port(task, PortId{st.object});
      tcb.port_index += 1;
      tcb.pc += 1;
      return VisitOutcome::Executed;

    case Opcode::Loop:
      tcb.loop_stack.push_back(st.count);
      tcb.pc += 1;
      return VisitOutcome::Executed;

    case Opcode::If:
      if (compare(st.cmp, tcb.state_bytes.at(st.var), st.constant)) tcb.pc += 1;
      else tcb.pc = st.link + 1;
      return VisitOutcome::Executed;

    case Opcode::End: {
      const auto& opener = program.body[st.link];
      if (opener.op == Opcode::Loop) {
        auto& top = tcb.loop_stack.back();
        top -= 1;
        if (top > 0) {
          tcb.pc = st.link + 1;
          return VisitOutcome::Executed;
        }
        tcb.loop_stack.pop_back();
      }
      tcb.pc += 1;
      return VisitOutcome::Executed;
    }

    case Opcode::Fail:
      tcb.state = TaskState::Failed;
      return VisitOutcome::Failed;

    case Opcode::Halt:
      tcb.state = TaskState::Halted;
      return VisitOutcome::Halted;
  }
  return VisitOutcome::Executed;
}

}  // namespace dreplay::sim
