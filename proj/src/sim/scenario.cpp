#include "dreplay/sim/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "dreplay/error.hpp"

namespace dreplay::sim {
namespace {

struct Token {
  std::string text;
  std::size_t column = 0;
};

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

std::vector<Token> lex_line(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == '#') break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (is_word_char(c)) {
      while (i < line.size() && is_word_char(line[i])) ++i;
    } else if ((c == '<' || c == '>' || c == '=' || c == '!') && i + 1 < line.size() && line[i + 1] == '=') {
      i += 2;
    } else {
      ++i;
    }
    out.push_back({std::string(line.substr(start, i - start)), start + 1});
  }
  return out;
}

struct NameRef {
  std::string name;
  std::size_t line = 0;
  std::size_t column = 0;
};

// Statement with unresolved object names, resolved after the whole file is read.
struct PendingStatement {
  Statement stmt;
  std::optional<NameRef> object;
  enum class Kind { None, Queue, Sem, Port } kind = Kind::None;
};

struct PendingTask {
  TaskProgram program;
  NameRef activation;
  std::vector<PendingStatement> body;
  std::size_t line = 0;
};

struct PendingInterrupt {
  InterruptDecl decl;
  NameRef queue;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Scenario parse() {
    std::size_t pos = 0;
    while (pos <= text_.size()) {
      auto nl = text_.find('\n', pos);
      if (nl == std::string_view::npos) nl = text_.size();
      ++line_no_;
      toks_ = lex_line(text_.substr(pos, nl - pos));
      at_ = 0;
      if (!toks_.empty()) line();
      pos = nl + 1;
    }
    if (current_) fail_at(current_->line, 1, ErrorCode::ParseError, "task '" + current_->program.name + "' missing endtask");
    return resolve();
  }

 private:
  [[noreturn]] void fail_at(std::size_t line, std::size_t col, ErrorCode code, const std::string& msg) const {
    throw ParseError(code, line, col, msg);
  }
  [[noreturn]] void fail(const std::string& msg, ErrorCode code = ErrorCode::ParseError) const {
    std::size_t col = at_ < toks_.size() ? toks_[at_].column : (toks_.empty() ? 1 : toks_.back().column + toks_.back().text.size());
    fail_at(line_no_, col, code, msg);
  }

  bool more() const { return at_ < toks_.size(); }
  const Token& peek() const {
    if (!more()) fail("unexpected end of line");
    return toks_[at_];
  }
  Token next() {
    auto t = peek();
    ++at_;
    return t;
  }
  void expect(std::string_view word) {
    if (!more() || toks_[at_].text != word) fail("expected '" + std::string(word) + "'");
    ++at_;
  }
  void end_of_line() {
    if (more()) fail("unexpected token '" + toks_[at_].text + "'");
  }

  std::string ident() {
    if (!more()) fail("expected identifier");
    const auto& t = toks_[at_];
    if (!std::isalpha(static_cast<unsigned char>(t.text[0])) && t.text[0] != '_') fail("expected identifier");
    ++at_;
    return t.text;
  }
  NameRef name_ref() {
    auto col = more() ? toks_[at_].column : 0;
    auto n = ident();
    return {n, line_no_, col};
  }

  std::int64_t integer() {
    bool neg = false;
    if (more() && toks_[at_].text == "-") {
      neg = true;
      ++at_;
    }
    if (!more()) fail("expected integer");
    const auto& t = toks_[at_];
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size()) fail("expected integer");
    ++at_;
    return neg ? -v : v;
  }
  std::uint64_t unsigned_int(const char* what) {
    auto col = more() ? toks_[at_].column : 0;
    auto v = integer();
    if (v < 0) fail_at(line_no_, col, ErrorCode::InvariantViolation, std::string(what) + " must be non-negative");
    return static_cast<std::uint64_t>(v);
  }
  std::uint32_t positive(const char* what) {
    auto col = more() ? toks_[at_].column : 0;
    auto v = unsigned_int(what);
    if (v < 1 || v > 0xFFFFFFFFu) fail_at(line_no_, col, ErrorCode::InvariantViolation, std::string(what) + " must be >= 1");
    return static_cast<std::uint32_t>(v);
  }
  std::uint8_t byte_value() {
    auto v = integer();
    return static_cast<std::uint8_t>(v & 0xFF);
  }

  std::uint32_t var() {
    if (!more()) fail("expected variable");
    const auto& t = toks_[at_];
    if (t.text.size() < 2 || t.text[0] != 'v') fail("expected variable 'vN'");
    std::uint32_t v = 0;
    auto [p, ec] = std::from_chars(t.text.data() + 1, t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size()) fail("expected variable 'vN'");
    if (current_ && v >= current_->program.state_size)
      fail("variable v" + std::to_string(v) + " outside state of size " + std::to_string(current_->program.state_size),
           ErrorCode::InvariantViolation);
    ++at_;
    return v;
  }

  Operand operand() {
    if (more() && toks_[at_].text[0] == 'v' && toks_[at_].text.size() > 1 &&
        std::isdigit(static_cast<unsigned char>(toks_[at_].text[1]))) {
      return {true, var()};
    }
    return {false, integer()};
  }
  Expr expr() {
    Expr e;
    e.first = operand();
    while (more()) {
      const auto& op = toks_[at_].text;
      BinOp b{};
      if (op == "+") b = BinOp::Add;
      else if (op == "-") b = BinOp::Sub;
      else if (op == "*") b = BinOp::Mul;
      else if (op == "&") b = BinOp::And;
      else if (op == "|") b = BinOp::Or;
      else if (op == "^") b = BinOp::Xor;
      else fail("expected operator");
      ++at_;
      e.rest.emplace_back(b, operand());
    }
    return e;
  }

  void line() {
    auto kw = peek().text;
    if (current_) {
      if (kw == "endtask") {
        ++at_;
        end_of_line();
        if (!open_blocks_.empty()) fail("unterminated loop/if block");
        tasks_.push_back(std::move(*current_));
        current_.reset();
        return;
      }
      statement();
      return;
    }
    ++at_;
    if (kw == "scenario") {
      s_.name = ident();
    } else if (kw == "seed") {
      s_.seed = unsigned_int("seed");
    } else if (kw == "limit") {
      s_.run_limit = unsigned_int("limit");
    } else if (kw == "queue") {
      QueueDecl q;
      auto ref = name_ref();
      q.name = ref.name;
      while (more()) {
        auto key = next().text;
        if (key == "capacity") q.capacity = positive("capacity");
        else if (key == "msgsize") q.msg_size = positive("msgsize");
        else fail("unknown queue attribute '" + key + "'");
      }
      declare(queue_names_, ref, s_.queues.size(), "queue");
      s_.queues.push_back(q);
    } else if (kw == "semaphore") {
      SemaphoreDecl d;
      auto ref = name_ref();
      d.name = ref.name;
      if (more()) {
        expect("count");
        auto v = unsigned_int("count");
        d.initial = static_cast<std::uint32_t>(v);
      }
      declare(sem_names_, ref, s_.semaphores.size(), "semaphore");
      s_.semaphores.push_back(d);
    } else if (kw == "port") {
      PortDecl p;
      auto ref = name_ref();
      p.name = ref.name;
      auto mode = next().text;
      if (mode == "random") {
        p.random = true;
      } else if (mode == "values") {
        while (more()) p.values.push_back(byte_value());
        if (p.values.empty()) fail("port needs at least one value", ErrorCode::InvariantViolation);
      } else {
        fail("expected 'values' or 'random'");
      }
      declare(port_names_, ref, s_.ports.size(), "port");
      s_.ports.push_back(p);
    } else if (kw == "task") {
      PendingTask t;
      t.line = line_no_;
      auto ref = name_ref();
      t.program.name = ref.name;
      bool have_prio = false, have_act = false;
      while (more()) {
        auto key = next().text;
        if (key == "priority") {
          t.program.priority = static_cast<int>(integer());
          have_prio = true;
        } else if (key == "state") {
          t.program.state_size = static_cast<std::uint32_t>(unsigned_int("state"));
        } else if (key == "activation") {
          t.activation = name_ref();
          have_act = true;
        } else if (key == "init") {
          while (more() && std::isdigit(static_cast<unsigned char>(toks_[at_].text[0]))) {
            auto col = toks_[at_].column;
            auto v = static_cast<std::uint32_t>(unsigned_int("init var"));
            if (v >= t.program.state_size)
              fail_at(line_no_, col, ErrorCode::InvariantViolation, "init-only var outside state");
            t.program.init_only_vars.push_back(v);
          }
        } else if (key == "noreplay") {
          t.program.replayed = false;
        } else {
          fail("unknown task attribute '" + key + "'");
        }
      }
      if (!have_prio) fail("task needs 'priority'");
      if (!have_act) fail("task needs 'activation'");
      declare(task_names_, ref, task_names_.size(), "task");
      current_ = std::move(t);
      return;
    } else if (kw == "at") {
      PendingInterrupt irq;
      irq.decl.tick = unsigned_int("tick");
      if (!interrupts_.empty()) {
        if (irq.decl.tick <= interrupts_.back().decl.tick)
          fail_at(line_no_, toks_[1].column, ErrorCode::InvariantViolation, "interrupt ticks must be strictly increasing");
      }
      expect("post");
      irq.queue = name_ref();
      if (more() && toks_[at_].text == "random") {
        ++at_;
        irq.decl.random = true;
      } else {
        irq.decl.value = byte_value();
      }
      interrupts_.push_back(irq);
    } else {
      at_ = 0;
      fail("unknown declaration '" + kw + "'");
    }
    end_of_line();
  }

  void statement() {
    auto& t = *current_;
    PendingStatement ps;
    auto& st = ps.stmt;
    auto kw = next().text;
    auto index = static_cast<std::uint32_t>(t.body.size());
    if (kw == "compute") {
      st.op = Opcode::Compute;
      st.count = positive("compute count");
    } else if (kw == "set") {
      st.op = Opcode::Set;
      st.var = var();
      expect("=");
      st.expr = expr();
    } else if (kw == "send") {
      st.op = Opcode::Send;
      ps.kind = PendingStatement::Kind::Queue;
      ps.object = name_ref();
      st.expr = expr();
    } else if (kw == "recv") {
      st.op = Opcode::Recv;
      ps.kind = PendingStatement::Kind::Queue;
      ps.object = name_ref();
      st.var = var();
    } else if (kw == "sem_wait" || kw == "sem_signal") {
      st.op = kw == "sem_wait" ? Opcode::SemWait : Opcode::SemSignal;
      ps.kind = PendingStatement::Kind::Sem;
      ps.object = name_ref();
    } else if (kw == "delay") {
      st.op = Opcode::Delay;
      st.count = positive("delay");
    } else if (kw == "read") {
      st.op = Opcode::ReadPort;
      ps.kind = PendingStatement::Kind::Port;
      ps.object = name_ref();
      st.var = var();
    } else if (kw == "loop") {
      st.op = Opcode::Loop;
      st.count = positive("loop count");
      open_blocks_.push_back(index);
    } else if (kw == "if") {
      st.op = Opcode::If;
      st.var = var();
      auto op = next().text;
      if (op == "==") st.cmp = CmpOp::Eq;
      else if (op == "!=") st.cmp = CmpOp::Ne;
      else if (op == "<") st.cmp = CmpOp::Lt;
      else if (op == "<=") st.cmp = CmpOp::Le;
      else if (op == ">") st.cmp = CmpOp::Gt;
      else if (op == ">=") st.cmp = CmpOp::Ge;
      else {
        --at_;
        fail("expected comparison operator");
      }
      st.constant = integer();
      open_blocks_.push_back(index);
    } else if (kw == "end") {
      if (open_blocks_.empty()) fail("'end' without open loop/if");
      st.op = Opcode::End;
      st.link = open_blocks_.back();
      t.body[open_blocks_.back()].stmt.link = index;
      open_blocks_.pop_back();
    } else if (kw == "fail") {
      st.op = Opcode::Fail;
    } else if (kw == "halt") {
      st.op = Opcode::Halt;
    } else {
      at_ = 0;
      fail("unknown statement '" + kw + "'");
    }
    end_of_line();
    t.body.push_back(std::move(ps));
  }

  void declare(std::map<std::string, std::size_t>& names, const NameRef& ref, std::size_t index, const char* what) {
    if (!names.emplace(ref.name, index).second)
      fail_at(ref.line, ref.column, ErrorCode::InvariantViolation, std::string("duplicate ") + what + " '" + ref.name + "'");
  }

  std::uint32_t lookup(const std::map<std::string, std::size_t>& names, const NameRef& ref, const char* what) const {
    auto it = names.find(ref.name);
    if (it == names.end())
      fail_at(ref.line, ref.column, ErrorCode::UnresolvedIdentifier, std::string("undeclared ") + what + " '" + ref.name + "'");
    return static_cast<std::uint32_t>(it->second);
  }

  Scenario resolve() {
    if (tasks_.empty()) fail_at(line_no_, 1, ErrorCode::InvariantViolation, "scenario declares no tasks");
    for (auto& t : tasks_) {
      t.program.activation = QueueId{lookup(queue_names_, t.activation, "queue")};
      for (auto& ps : t.body) {
        if (ps.object) {
          switch (ps.kind) {
            case PendingStatement::Kind::Queue: ps.stmt.object = lookup(queue_names_, *ps.object, "queue"); break;
            case PendingStatement::Kind::Sem: ps.stmt.object = lookup(sem_names_, *ps.object, "semaphore"); break;
            case PendingStatement::Kind::Port: ps.stmt.object = lookup(port_names_, *ps.object, "port"); break;
            case PendingStatement::Kind::None: break;
          }
        }
        t.program.body.push_back(ps.stmt);
      }
      s_.tasks.push_back(std::move(t.program));
    }
    for (auto& irq : interrupts_) {
      irq.decl.queue = QueueId{lookup(queue_names_, irq.queue, "queue")};
      s_.interrupts.push_back(irq.decl);
    }
    validate(s_);
    return std::move(s_);
  }

  std::string_view text_;
  std::size_t line_no_ = 0;
  std::vector<Token> toks_;
  std::size_t at_ = 0;

  Scenario s_;
  std::map<std::string, std::size_t> queue_names_, sem_names_, port_names_, task_names_;
  std::optional<PendingTask> current_;
  std::vector<PendingTask> tasks_;
  std::vector<PendingInterrupt> interrupts_;
  std::vector<std::uint32_t> open_blocks_;
};

const char* binop_text(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::And: return "&";
    case BinOp::Or: return "|";
    case BinOp::Xor: return "^";
  }
  return "?";
}

const char* cmp_text(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

void print_operand(std::ostream& os, const Operand& o) {
  if (o.is_var) os << 'v' << o.value;
  else os << o.value;
}

void print_expr(std::ostream& os, const Expr& e) {
  print_operand(os, e.first);
  for (const auto& [op, rhs] : e.rest) {
    os << ' ' << binop_text(op) << ' ';
    print_operand(os, rhs);
  }
}

[[noreturn]] void invalid(const std::string& msg) { throw ParseError(ErrorCode::InvariantViolation, 0, 0, msg); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

Scenario parse_scenario(std::string_view text) { return Parser(text).parse(); }

std::string serialize_scenario(const Scenario& s) {
  std::ostringstream os;
  os << "scenario " << s.name << "\n";
  os << "seed " << s.seed << "\n";
  os << "limit " << s.run_limit << "\n";
  for (const auto& q : s.queues) os << "queue " << q.name << " capacity " << q.capacity << " msgsize " << q.msg_size << "\n";
  for (const auto& d : s.semaphores) os << "semaphore " << d.name << " count " << d.initial << "\n";
  for (const auto& p : s.ports) {
    os << "port " << p.name;
    if (p.random) {
      os << " random";
    } else {
      os << " values";
      for (auto v : p.values) os << ' ' << static_cast<int>(v);
    }
    os << "\n";
  }
  for (const auto& t : s.tasks) {
    os << "task " << t.name << " priority " << t.priority << " state " << t.state_size << " activation "
       << s.queues.at(t.activation.value).name;
    if (!t.init_only_vars.empty()) {
      os << " init";
      for (auto v : t.init_only_vars) os << ' ' << v;
    }
    if (!t.replayed) os << " noreplay";
    os << "\n";
    int depth = 1;
    for (const auto& st : t.body) {
      if (st.op == Opcode::End) --depth;
      os << std::string(static_cast<std::size_t>(depth) * 2, ' ');
      switch (st.op) {
        case Opcode::Compute: os << "compute " << st.count; break;
        case Opcode::Set:
          os << "set v" << st.var << " = ";
          print_expr(os, st.expr);
          break;
        case Opcode::Send:
          os << "send " << s.queues.at(st.object).name << ' ';
          print_expr(os, st.expr);
          break;
        case Opcode::Recv: os << "recv " << s.queues.at(st.object).name << " v" << st.var; break;
        case Opcode::SemWait: os << "sem_wait " << s.semaphores.at(st.object).name; break;
        case Opcode::SemSignal: os << "sem_signal " << s.semaphores.at(st.object).name; break;
        case Opcode::Delay: os << "delay " << st.count; break;
        case Opcode::ReadPort: os << "read " << s.ports.at(st.object).name << " v" << st.var; break;
        case Opcode::Loop: os << "loop " << st.count; break;
        case Opcode::If: os << "if v" << st.var << ' ' << cmp_text(st.cmp) << ' ' << st.constant; break;
        case Opcode::End: os << "end"; break;
        case Opcode::Fail: os << "fail"; break;
        case Opcode::Halt: os << "halt"; break;
      }
      os << "\n";
      if (st.op == Opcode::Loop || st.op == Opcode::If) ++depth;
    }
    os << "endtask\n";
  }
  for (const auto& irq : s.interrupts) {
    os << "at " << irq.tick << " post " << s.queues.at(irq.queue.value).name << ' ';
    if (irq.random) os << "random";
    else os << static_cast<int>(irq.value);
    os << "\n";
  }
  return os.str();
}

std::uint64_t scenario_hash(const Scenario& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : serialize_scenario(s)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void validate(const Scenario& s) {
  if (s.tasks.empty()) invalid("scenario declares no tasks");
  for (const auto& q : s.queues)
    if (q.capacity < 1 || q.msg_size < 1) invalid("queue '" + q.name + "' needs capacity and msgsize >= 1");
  for (const auto& p : s.ports)
    if (!p.random && p.values.empty()) invalid("port '" + p.name + "' has no values");
  for (std::size_t i = 1; i < s.interrupts.size(); ++i)
    if (s.interrupts[i].tick <= s.interrupts[i - 1].tick) invalid("interrupt ticks must be strictly increasing");
  for (const auto& irq : s.interrupts)
    if (irq.queue.value >= s.queues.size()) invalid("interrupt targets unknown queue");

  // queue index -> whether a replayed / non-replayed task receives from it
  std::vector<bool> replayed_rx(s.queues.size()), other_rx(s.queues.size());
  std::vector<bool> replayed_wait(s.semaphores.size()), other_wait(s.semaphores.size());
  for (const auto& t : s.tasks) {
    if (t.activation.value >= s.queues.size()) invalid("task '" + t.name + "' activation queue unknown");
    for (auto v : t.init_only_vars)
      if (v >= t.state_size) invalid("task '" + t.name + "' init-only var outside state");
    std::vector<std::uint32_t> open;
    auto check_var = [&](std::uint32_t v) {
      if (v >= t.state_size) invalid("task '" + t.name + "' variable outside state");
    };
    auto check_expr = [&](const Expr& e) {
      if (e.first.is_var) check_var(static_cast<std::uint32_t>(e.first.value));
      for (const auto& [op, o] : e.rest)
        if (o.is_var) check_var(static_cast<std::uint32_t>(o.value));
    };
    (t.replayed ? replayed_rx : other_rx)[t.activation.value] = true;
    for (std::uint32_t i = 0; i < t.body.size(); ++i) {
      const auto& st = t.body[i];
      switch (st.op) {
        case Opcode::Compute:
        case Opcode::Delay:
        case Opcode::Loop:
          if (st.count < 1) invalid("task '" + t.name + "' count must be >= 1");
          if (st.op == Opcode::Loop) open.push_back(i);
          break;
        case Opcode::If:
          check_var(st.var);
          open.push_back(i);
          break;
        case Opcode::End:
          if (open.empty() || st.link != open.back() || t.body[open.back()].link != i)
            invalid("task '" + t.name + "' unbalanced end");
          open.pop_back();
          break;
        case Opcode::Set:
          check_var(st.var);
          check_expr(st.expr);
          break;
        case Opcode::Send:
          if (st.object >= s.queues.size()) invalid("unknown queue");
          check_expr(st.expr);
          break;
        case Opcode::Recv:
          if (st.object >= s.queues.size()) invalid("unknown queue");
          check_var(st.var);
          (t.replayed ? replayed_rx : other_rx)[st.object] = true;
          break;
        case Opcode::SemWait:
        case Opcode::SemSignal:
          if (st.object >= s.semaphores.size()) invalid("unknown semaphore");
          if (st.op == Opcode::SemWait) (t.replayed ? replayed_wait : other_wait)[st.object] = true;
          break;
        case Opcode::ReadPort:
          if (st.object >= s.ports.size()) invalid("unknown port");
          check_var(st.var);
          break;
        case Opcode::Fail:
        case Opcode::Halt: break;
      }
    }
    if (!open.empty()) invalid("task '" + t.name + "' unterminated block");
  }
  for (std::size_t q = 0; q < s.queues.size(); ++q)
    if (replayed_rx[q] && other_rx[q])
      invalid("queue '" + s.queues[q].name + "' is received by both replayed and non-replayed tasks");
  for (std::size_t i = 0; i < s.semaphores.size(); ++i)
    if (replayed_wait[i] && other_wait[i])
      invalid("semaphore '" + s.semaphores[i].name + "' is waited on by both replayed and non-replayed tasks");
}

std::uint8_t interrupt_value(const Scenario& s, std::size_t index) {
  const auto& irq = s.interrupts.at(index);
  if (!irq.random) return irq.value;
  return static_cast<std::uint8_t>(splitmix64(s.seed ^ (0x1000000ull + index)));
}

std::uint8_t port_value(const Scenario& s, PortId port, std::uint64_t access) {
  const auto& p = s.ports.at(port.value);
  if (!p.random) return p.values[access % p.values.size()];
  return static_cast<std::uint8_t>(splitmix64(splitmix64(s.seed ^ (static_cast<std::uint64_t>(port.value) << 40)) + access));
}

std::vector<std::uint8_t> make_payload(std::uint32_t msg_size, std::int64_t value) {
  std::vector<std::uint8_t> out(msg_size);
  for (std::uint32_t i = 0; i < msg_size; ++i) out[i] = static_cast<std::uint8_t>(value + i);
  return out;
}

}  // namespace dreplay::sim
