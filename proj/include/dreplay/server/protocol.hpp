#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dreplay/replay/session.hpp"
#include "json.hpp"

namespace dreplay {

inline constexpr const char* kProtocolSchema = "dreplay.debug/1";

/// Maps protocol documents onto one replay session. Each request yields the
/// events it caused followed by exactly one response.
class Dispatcher {
 public:
  std::vector<nlohmann::json> handle(const nlohmann::json& request);
  std::vector<nlohmann::json> handle_line(std::string_view line);

  const ReplaySession* session() const { return session_ ? &*session_ : nullptr; }

 private:
  nlohmann::json dispatch(const std::string& type, const nlohmann::json& req);
  nlohmann::json run(SessionStatus status);
  nlohmann::json event(const std::string& type, nlohmann::json body);
  ReplaySession& need_session();
  void attach(ReplaySession& s);

  std::optional<ReplaySession> session_;
  std::vector<nlohmann::json> events_;
  std::uint64_t event_seq_ = 0;
};

nlohmann::json to_json(const BreakpointSpec& b);
/// Throws ProtocolError on malformed specs.
BreakpointSpec breakpoint_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TaskView& v);
nlohmann::json to_json(const ControlFlowEvent& e);

struct ProtocolError {
  std::string code;
  std::string message;
};

}  // namespace dreplay
