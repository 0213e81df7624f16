#include <sstream>

#include "dreplay/recorder/checksum.hpp"
#include "dreplay/replay/session.hpp"
#include "json.hpp"

namespace dreplay {

bool DeterminismReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

DeterminismReport verify(const ReplaySession& s) {
  DeterminismReport r;
  r.status = s.status();
  r.divergence = s.divergence();
  const auto& plan = s.plan();

  r.checks.push_back({"completed", s.status() == SessionStatus::Completed,
                      std::string("status ") + to_string(s.status()) + " at tick " + std::to_string(s.clock())});

  r.checks.push_back({"switches_consumed", s.cursor() == plan.forced.size(),
                      std::to_string(s.cursor()) + " of " + std::to_string(plan.forced.size())});

  std::vector<sim::SwitchRecord> expected;
  for (const auto& e : plan.forced) expected.push_back(e.as_switch());
  bool order = s.performed() == expected;
  std::string order_detail = order ? "identical" : "differs";
  if (!order) {
    std::size_t i = 0;
    while (i < expected.size() && i < s.performed().size() && expected[i] == s.performed()[i]) ++i;
    order_detail += " from index " + std::to_string(i);
  }
  r.checks.push_back({"switch_order", order, order_detail});

  r.checks.push_back({"verification_matched", s.verified_count() == plan.verification.size(),
                      std::to_string(s.verified_count()) + " of " + std::to_string(plan.verification.size())});

  auto injected = s.consumed_injections() + s.consumed_ports() + s.consumed_wakeups();
  auto total = plan.injections.size() + plan.port_values.size() + plan.wakeups.size();
  r.checks.push_back({"injections_consumed", injected == total, std::to_string(injected) + " of " + std::to_string(total)});

  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < s.state().tasks.size(); ++i) {
    if (!s.scenario().tasks[i].replayed) continue;
    const auto& t = s.state().tasks[i];
    if (context_checksum(t.state_bytes, t.loop_stack, t.pc) != plan.reference_checksums.at(i)) bad.push_back(i);
  }
  std::string detail = bad.empty() ? "all replayed tasks match" : "mismatch in task";
  for (auto i : bad) detail += " " + s.scenario().tasks[i].name;
  r.checks.push_back({"final_checksums", bad.empty(), detail});
  return r;
}

DeterminismReport replay_and_verify(const ReplayPlan& plan, ReplayOptions options) {
  auto s = ReplaySession::load(plan, options);
  s.resume();
  return verify(s);
}

nlohmann::json DeterminismReport::to_json() const {
  nlohmann::json j;
  j["passed"] = passed();
  j["status"] = to_string(status);
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  if (divergence) {
    nlohmann::json d{{"tick", divergence->tick}, {"cursor", divergence->cursor}, {"reason", divergence->reason}};
    if (divergence->expected) {
      const auto& e = *divergence->expected;
      d["expected"] = {{"seq", e.seq}, {"tick", e.tick}, {"kind", sim::to_string(e.kind)}};
      if (e.marker)
        d["expected"]["marker"] = {{"task", e.marker->task.value}, {"pc", e.marker->pc},
                                   {"occurrence", e.marker->occurrence}, {"checksum", e.marker->checksum}};
    }
    if (divergence->observed) {
      const auto& m = *divergence->observed;
      d["observed"] = {{"task", m.task.value}, {"pc", m.pc}, {"occurrence", m.occurrence}, {"checksum", m.checksum}};
    }
    j["divergence"] = std::move(d);
  }
  return j;
}

std::string DeterminismReport::summary() const {
  std::ostringstream o;
  o << (passed() ? "PASS" : "FAIL") << " (" << to_string(status) << ")\n";
  for (const auto& c : checks) o << "  [" << (c.passed ? "ok" : "!!") << "] " << c.name << ": " << c.detail << "\n";
  if (divergence) o << "  divergence at tick " << divergence->tick << ": " << divergence->reason << "\n";
  return o.str();
}

}  // namespace dreplay
