#include "dreplay/server/protocol.hpp"

namespace dreplay {
namespace {

using nlohmann::json;

[[noreturn]] void bad_request(const std::string& msg) { throw ProtocolError{"InvalidRequest", msg}; }

std::uint64_t get_uint(const json& j, const char* field) {
  if (!j.is_object() || !j.contains(field)) bad_request(std::string("missing field '") + field + "'");
  const auto& v = j.at(field);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    bad_request(std::string("field '") + field + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::uint32_t get_u32(const json& j, const char* field) {
  auto v = get_uint(j, field);
  if (v > UINT32_MAX) bad_request(std::string("field '") + field + "' is out of range");
  return static_cast<std::uint32_t>(v);
}

json marker_json(const Marker& m) {
  return {{"task", m.task.value}, {"pc", m.pc}, {"occurrence", m.occurrence}, {"instance", m.instance},
          {"checksum", m.checksum}};
}

const char* task_state_name(sim::TaskState s) {
  switch (s) {
    case sim::TaskState::Ready: return "Ready";
    case sim::TaskState::Running: return "Running";
    case sim::TaskState::BlockedOnQueue: return "BlockedOnQueue";
    case sim::TaskState::BlockedOnSem: return "BlockedOnSem";
    case sim::TaskState::Delayed: return "Delayed";
    case sim::TaskState::Halted: return "Halted";
    case sim::TaskState::Failed: return "Failed";
  }
  return "?";
}

json keys_json(const std::vector<AccessKey>& keys) {
  json a = json::array();
  for (const auto& k : keys) a.push_back({{"instance", k.instance}, {"index", k.index}});
  return a;
}

}  // namespace

json to_json(const BreakpointSpec& b) {
  switch (b.kind) {
    case BreakpointSpec::Kind::AtTick: return {{"kind", "AtTick"}, {"tick", b.tick}};
    case BreakpointSpec::Kind::AtMarker:
      return {{"kind", "AtMarker"}, {"task", b.task.value}, {"pc", b.pc}, {"occurrence", b.occurrence},
              {"instance", b.instance}};
    case BreakpointSpec::Kind::AtEvent: return {{"kind", "AtEvent"}, {"seq", b.seq}};
  }
  return {};
}

BreakpointSpec breakpoint_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) bad_request("breakpoint needs a string 'kind'");
  auto kind = j["kind"].get<std::string>();
  if (kind == "AtTick") return BreakpointSpec::at_tick(get_uint(j, "tick"));
  if (kind == "AtMarker")
    return BreakpointSpec::at_marker(TaskId{get_u32(j, "task")}, get_u32(j, "pc"), get_u32(j, "occurrence"),
                                     get_uint(j, "instance"));
  if (kind == "AtEvent") return BreakpointSpec::at_event(get_uint(j, "seq"));
  bad_request("unknown breakpoint kind '" + kind + "'");
}

json to_json(const TaskView& v) {
  return {{"task", v.task.value},
          {"name", v.name},
          {"state", task_state_name(v.state)},
          {"pc", v.pc},
          {"occurrence", v.occurrence},
          {"instance", v.instance},
          {"state_bytes", v.state_bytes},
          {"loop_stack", v.loop_stack},
          {"checksum", v.checksum},
          {"pending_messages", keys_json(v.pending_messages)},
          {"pending_ports", keys_json(v.pending_ports)}};
}

json to_json(const ControlFlowEvent& e) {
  json j{{"seq", e.seq},
         {"tick", e.tick},
         {"kind", sim::to_string(e.kind)},
         {"from", e.from ? json(e.from->value) : json()},
         {"to", e.to ? json(e.to->value) : json()}};
  if (e.kind == SwitchKind::BlockingCall) {
    j["primitive"] = static_cast<int>(e.primitive);
    j["object"] = e.object;
  }
  if (e.marker) j["marker"] = marker_json(*e.marker);
  return j;
}

json Dispatcher::event(const std::string& type, json body) {
  body["schema"] = kProtocolSchema;
  body["kind"] = "event";
  body["type"] = type;
  body["event_seq"] = event_seq_++;
  return body;
}

ReplaySession& Dispatcher::need_session() {
  if (!session_) throw ProtocolError{"NoSession", "no plan loaded"};
  return *session_;
}

void Dispatcher::attach(ReplaySession& s) {
  s.on_switch = [this](const ControlFlowEvent& e) { events_.push_back(event("SwitchOccurred", {{"event", to_json(e)}})); };
}

json Dispatcher::run(SessionStatus status) {
  auto& s = *session_;
  switch (status) {
    case SessionStatus::HaltedAtBreakpoint: {
      json body{{"clock", s.clock()}, {"cursor", s.cursor()}};
      body["breakpoint"] = s.halted_at() ? json(*s.halted_at()) : json();
      events_.push_back(event("HaltedAtBreakpoint", std::move(body)));
      break;
    }
    case SessionStatus::Completed: events_.push_back(event("Completed", {{"clock", s.clock()}})); break;
    case SessionStatus::DivergenceDetected: {
      const auto& d = *s.divergence();
      json body{{"clock", d.tick}, {"cursor", d.cursor}, {"reason", d.reason}};
      body["expected"] = d.expected ? to_json(*d.expected) : json();
      body["observed"] = d.observed ? marker_json(*d.observed) : json();
      events_.push_back(event("Diverged", std::move(body)));
      break;
    }
    default: break;
  }
  return {{"status", to_string(status)}, {"clock", s.clock()}, {"cursor", s.cursor()}};
}

json Dispatcher::dispatch(const std::string& type, const json& req) {
  if (type == "LoadPlan") {
    if (!req.contains("path") || !req["path"].is_string()) bad_request("LoadPlan needs a string 'path'");
    ReplayOptions opts;
    auto plan = load_plan(req["path"].get<std::string>());
    auto s = ReplaySession::load(std::move(plan), opts);
    session_.emplace(std::move(s));
    attach(*session_);
    return {{"status", to_string(session_->status())},
            {"t_start", session_->t_start()},
            {"t_fail", session_->t_fail()},
            {"forced_switches", session_->plan().forced.size()},
            {"tasks", session_->scenario().tasks.size()}};
  }
  if (type == "Continue") return run(need_session().resume());
  if (type == "Step") return run(need_session().step());
  if (type == "RunTo") {
    auto& s = need_session();
    if (!req.contains("breakpoint")) bad_request("RunTo needs 'breakpoint'");
    return run(s.run_to(breakpoint_from_json(req["breakpoint"])));
  }
  if (type == "AddBreakpoint") {
    auto& s = need_session();
    if (!req.contains("breakpoint")) bad_request("AddBreakpoint needs 'breakpoint'");
    return {{"id", s.add_breakpoint(breakpoint_from_json(req["breakpoint"]))}};
  }
  if (type == "RemoveBreakpoint") {
    auto& s = need_session();
    return {{"removed", s.remove_breakpoint(get_u32(req, "breakpoint_id"))}};
  }
  if (type == "Inspect") {
    auto& s = need_session();
    if (s.status() == SessionStatus::Running) throw ProtocolError{"InvalidState", "session is running"};
    return to_json(s.inspect(TaskId{get_u32(req, "task")}));
  }
  if (type == "TimelineQuery") {
    auto& s = need_session();
    auto from = get_uint(req, "from");
    auto to = get_uint(req, "to");
    if (from > to) bad_request("'from' exceeds 'to'");
    json events = json::array();
    const auto& forced = s.plan().forced;
    for (std::size_t i = 0; i < forced.size(); ++i) {
      if (forced[i].tick < from || forced[i].tick > to) continue;
      auto j = to_json(forced[i]);
      j["performed"] = i < s.cursor();
      events.push_back(std::move(j));
    }
    return {{"from", from}, {"to", to}, {"events", std::move(events)}};
  }
  if (type == "SessionStatus") {
    if (!session_) return {{"status", nullptr}};
    auto& s = *session_;
    json bps = json::array();
    for (const auto& b : s.breakpoints())
      bps.push_back({{"id", b.id}, {"spec", to_json(b.spec)}, {"enabled", b.enabled}, {"one_shot", b.one_shot}});
    json j{{"status", to_string(s.status())}, {"clock", s.clock()}, {"cursor", s.cursor()},
           {"t_start", s.t_start()}, {"t_fail", s.t_fail()}, {"breakpoints", std::move(bps)}};
    j["halted_at"] = s.halted_at() ? json(*s.halted_at()) : json();
    j["running"] = s.state().running ? json(s.state().running->value) : json();
    return j;
  }
  throw ProtocolError{"UnknownRequest", "unknown request type '" + type + "'"};
}

std::vector<json> Dispatcher::handle(const json& request) {
  json response{{"schema", kProtocolSchema}, {"kind", "response"}};
  events_.clear();
  try {
    if (!request.is_object()) throw ProtocolError{"InvalidRequest", "request must be an object"};
    response["id"] = request.contains("id") ? request["id"] : json();
    if (!request.contains("schema") || request["schema"] != kProtocolSchema)
      throw ProtocolError{"SchemaMismatch", std::string("expected schema ") + kProtocolSchema};
    if (!request.contains("type") || !request["type"].is_string())
      throw ProtocolError{"InvalidRequest", "request needs a string 'type'"};
    auto type = request["type"].get<std::string>();
    response["type"] = type;
    response["result"] = dispatch(type, request);
    response["ok"] = true;
  } catch (const ProtocolError& e) {
    response["ok"] = false;
    response["error"] = {{"code", e.code}, {"message", e.message}};
  } catch (const Error& e) {
    response["ok"] = false;
    response["error"] = {{"code", std::string(e.name())}, {"message", e.what()}};
  } catch (const json::exception& e) {
    response["ok"] = false;
    response["error"] = {{"code", "InvalidRequest"}, {"message", e.what()}};
  }
  auto out = std::move(events_);
  events_.clear();
  out.push_back(std::move(response));
  return out;
}

std::vector<json> Dispatcher::handle_line(std::string_view line) {
  json req;
  try {
    req = json::parse(line);
  } catch (const json::parse_error& e) {
    json response{{"schema", kProtocolSchema}, {"kind", "response"}, {"id", nullptr}, {"ok", false}};
    response["error"] = {{"code", "ParseError"}, {"message", e.what()}};
    return {response};
  }
  return handle(req);
}

}  // namespace dreplay
