#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dreplay/bench/bench.hpp"
#include "dreplay/historian/plan.hpp"
#include "dreplay/replay/session.hpp"
#include "dreplay/server/server.hpp"

using namespace dreplay;

namespace {

struct BufferFlags {
  std::optional<std::size_t> data, control, checkpoints;
  std::optional<Tick> period;
  std::optional<std::uint64_t> seed;
};

void add_buffer_flags(CLI::App* app, BufferFlags& f) {
  app->add_option("--data-capacity", f.data, "Per-task data ring capacity (env DREPLAY_DATA_CAPACITY)");
  app->add_option("--control-capacity", f.control, "Control-flow ring capacity (env DREPLAY_CONTROL_CAPACITY)");
  app->add_option("--checkpoint-capacity", f.checkpoints,
                  "Checkpoint ring capacity, >= 2 (env DREPLAY_CHECKPOINT_CAPACITY)");
  app->add_option("-k,--checkpoint-period", f.period, "Ticks between kernel checkpoints (env DREPLAY_CHECKPOINT_PERIOD)");
  app->add_option("--seed", f.seed, "Override the scenario seed");
}

std::optional<std::uint64_t> env_number(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t used = 0;
    auto n = std::stoull(v, &used);
    if (used != std::strlen(v)) throw std::invalid_argument(name);
    return n;
  } catch (const std::exception&) {
    throw CLI::ValidationError(name, std::string("not a number: ") + v);
  }
}

sim::Scenario load_scenario(const std::string& path, const BufferFlags& f) {
  auto bytes = read_file(path);
  auto s = sim::parse_scenario(std::string(bytes.begin(), bytes.end()));
  if (f.seed) s.seed = *f.seed;
  sim::validate(s);
  return s;
}

RecorderConfig make_config(const sim::Scenario& s, const BufferFlags& f) {
  auto data = f.data ? *f.data : env_number("DREPLAY_DATA_CAPACITY").value_or(1024);
  auto c = RecorderConfig::defaults_for(s, data);
  if (auto v = f.control ? f.control : env_number("DREPLAY_CONTROL_CAPACITY")) c.control_capacity = *v;
  if (auto v = f.checkpoints ? f.checkpoints : env_number("DREPLAY_CHECKPOINT_CAPACITY")) c.checkpoint_capacity = *v;
  if (auto v = f.period ? f.period : env_number("DREPLAY_CHECKPOINT_PERIOD")) c.checkpoint_period = *v;
  return c;
}

ReplayPlan plan_for(const std::string& plan_path, const std::string& trace_path) {
  if (!plan_path.empty()) return load_plan(plan_path);
  return plan_from_trace(load_trace(trace_path));
}

int report_exit(const DeterminismReport& r, bool json) {
  if (json) std::cout << r.to_json().dump(2) << "\n";
  else std::cout << r.summary();
  if (r.passed()) return 0;
  std::cerr << "error: " << (r.divergence ? "DivergenceDetected" : "VerificationFailed") << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Record, analyze and deterministically replay simulated RTOS executions"};
  app.require_subcommand(1);
  BufferFlags flags;
  std::string scenario_path, trace_path, plan_path, out_path, format = "csv", bind = "127.0.0.1:7878";
  bool verify_flag = false, json = false, once = false;
  std::optional<Tick> tick;

  auto* rec = app.add_subcommand("record", "Run a scenario with the recorder attached");
  rec->add_option("-s,--scenario", scenario_path, "Scenario file")->required();
  rec->add_option("-o,--output", out_path, "Trace file to write")->required();
  add_buffer_flags(rec, flags);

  auto* prn = app.add_subcommand("prune", "Compute the consistent window and start state of a trace");
  prn->add_option("-t,--trace", trace_path, "Trace file")->required();
  prn->add_option("-o,--output", out_path, "Write the pruned trace here");

  auto* pln = app.add_subcommand("plan", "Build a replay plan from a trace");
  pln->add_option("-t,--trace", trace_path, "Trace file")->required();
  pln->add_option("-o,--output", out_path, "Plan file to write")->required();

  auto* rep = app.add_subcommand("replay", "Replay a plan (or a trace) to the end");
  auto* rep_src = rep->add_option_group("source");
  rep_src->add_option("-p,--plan", plan_path, "Plan file");
  rep_src->add_option("-t,--trace", trace_path, "Trace file; planned on the fly");
  rep_src->require_option(1);
  rep->add_flag("--verify", verify_flag, "Print the determinism report");
  rep->add_option("--until", tick, "Stop at this tick and print the task views");
  rep->add_flag("--json", json, "Machine-readable output");

  auto* ver = app.add_subcommand("verify", "Replay and print the determinism report");
  auto* ver_src = ver->add_option_group("source");
  ver_src->add_option("-p,--plan", plan_path, "Plan file");
  ver_src->add_option("-t,--trace", trace_path, "Trace file; planned on the fly");
  ver_src->require_option(1);
  ver->add_flag("--json", json, "Machine-readable output");

  auto* bch = app.add_subcommand("bench", "Measure probe overhead of a scenario");
  bch->add_option("-s,--scenario", scenario_path, "Scenario file")->required();
  bch->add_option("--format", format, "csv or text")->check(CLI::IsMember({"csv", "text"}));
  add_buffer_flags(bch, flags);

  auto* srv = app.add_subcommand("serve", "Run the debug server");
  srv->add_option("--bind", bind, "host:port to listen on");
  srv->add_flag("--once", once, "Exit after the first client disconnects");

  auto* dmp = app.add_subcommand("dump", "Print a trace as JSON");
  dmp->add_option("-t,--trace", trace_path, "Trace file")->required();
  dmp->add_option("--tick", tick, "Only records stamped at this tick");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*rec) {
      auto s = load_scenario(scenario_path, flags);
      auto t = record(s, make_config(s, flags));
      save_trace(out_path, t);
      std::cout << "recorded " << s.name << ": " << sim::to_string(t.cause) << " at tick " << t.end_tick << ", "
                << t.control.size() + t.control.overwritten() << " switches (" << t.control.overwritten()
                << " overwritten), " << t.checkpoints.size() << " checkpoints retained\n";
    } else if (*prn) {
      auto t = load_trace(trace_path);
      auto report = prune(t);
      std::optional<StartState> start;
      try {
        start = find_start(t, report.window);
      } catch (const Error& e) {
        std::cout << format_report(report, std::nullopt);
        throw;
      }
      std::cout << format_report(report, start);
      if (!out_path.empty()) save_trace(out_path, t);
    } else if (*pln) {
      auto t = load_trace(trace_path);
      auto report = prune(t);
      auto start = find_start(t, report.window);
      auto plan = build_plan(t, report.window, start);
      save_plan(out_path, plan);
      std::cout << format_report(report, start) << "plan: " << plan.forced.size() << " forced switches, "
                << plan.injections.size() << " message injections, " << plan.port_values.size() << " port values, "
                << plan.verification.size() << " verification records\n";
    } else if (*rep) {
      auto session = ReplaySession::load(plan_for(plan_path, trace_path));
      if (tick) session.run_to(BreakpointSpec::at_tick(*tick));
      else session.resume();
      if (tick && session.status() == SessionStatus::HaltedAtBreakpoint) {
        nlohmann::json views = nlohmann::json::array();
        for (std::uint32_t i = 0; i < session.scenario().tasks.size(); ++i) {
          if (!session.scenario().tasks[i].replayed) continue;
          auto v = session.inspect(TaskId{i});
          views.push_back({{"task", v.name}, {"pc", v.pc}, {"instance", v.instance}, {"state_bytes", v.state_bytes},
                           {"loop_stack", v.loop_stack}, {"checksum", v.checksum}});
        }
        std::cout << nlohmann::json{{"clock", session.clock()}, {"tasks", views}}.dump(json ? 2 : -1) << "\n";
        return 0;
      }
      auto report = verify(session);
      if (verify_flag) return report_exit(report, json);
      std::cout << to_string(session.status()) << " at tick " << session.clock() << " after "
                << session.performed().size() << " switches\n";
      if (session.status() == SessionStatus::DivergenceDetected) {
        std::cerr << "error: DivergenceDetected: " << session.divergence()->reason << "\n";
        return 1;
      }
    } else if (*ver) {
      return report_exit(replay_and_verify(plan_for(plan_path, trace_path)), json);
    } else if (*bch) {
      auto s = load_scenario(scenario_path, flags);
      auto b = measure(s, make_config(s, flags));
      std::cout << (format == "csv" ? format_csv(b) : format_text(b));
    } else if (*srv) {
      ServeOptions o;
      o.bind = bind;
      o.max_clients = once ? 1 : 0;
      o.on_listening = [](std::uint16_t port) { std::cerr << "listening on port " << port << "\n"; };
      serve(o);
    } else if (*dmp) {
      std::cout << trace_to_json(load_trace(trace_path), tick).dump(2) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.name() << ": " << e.what() << "\n";
    return 1;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
