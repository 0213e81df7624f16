#include "dreplay/historian/historian.hpp"

#include <sstream>

namespace dreplay {

Tick lower_bound_of(const BufferExtent& b, const std::string& name) {
  if (b.oldest) return *b.oldest;
  if (b.newest_discarded) return *b.newest_discarded + 1;
  throw Error(ErrorCode::EmptyBuffer, "mandatory buffer " + name + " has no entries");
}

ConsistentWindow compute_window(std::span<const BufferExtent> buffers, std::span<const std::string> names,
                                Tick t_fail) {
  ConsistentWindow w{0, t_fail};
  for (std::size_t i = 0; i < buffers.size(); ++i)
    w.t_min = std::max(w.t_min, lower_bound_of(buffers[i], i < names.size() ? names[i] : std::to_string(i)));
  if (w.t_min > t_fail)
    throw Error(ErrorCode::InsufficientOverlap,
                "t_min " + std::to_string(w.t_min) + " exceeds t_fail " + std::to_string(t_fail));
  return w;
}

MandatoryBuffers mandatory_buffers(const Trace& t) {
  auto s = t.scenario();
  MandatoryBuffers m;
  m.names.push_back("control");
  m.extents.push_back(extent_of(t.control));
  m.names.push_back("checkpoints");
  m.extents.push_back(extent_of(t.checkpoints));
  for (std::size_t i = 0; i < s.tasks.size(); ++i) {
    if (!s.tasks[i].replayed) continue;
    m.names.push_back("data:" + s.tasks[i].name);
    m.extents.push_back(extent_of(t.data[i]));
  }
  return m;
}

ConsistentWindow compute_window(const Trace& t) {
  if (t.pruned_t_min) return {*t.pruned_t_min, t.end_tick};
  auto m = mandatory_buffers(t);
  return compute_window(m.extents, m.names, t.end_tick);
}

PruneReport prune(Trace& t) {
  PruneReport r;
  r.window = compute_window(t);
  auto s = t.scenario();
  auto cut = [&](auto& ring, std::string name) {
    BufferReport b{std::move(name), ring.size(), 0, ring.overwritten()};
    b.discarded = ring.discard_before(r.window.t_min);
    r.buffers.push_back(std::move(b));
  };
  cut(t.control, "control");
  cut(t.checkpoints, "checkpoints");
  for (std::size_t i = 0; i < s.tasks.size(); ++i)
    if (s.tasks[i].replayed) cut(t.data[i], "data:" + s.tasks[i].name);
  t.pruned_t_min = r.window.t_min;
  return r;
}

StartState find_start(const Trace& t, const ConsistentWindow& w) {
  auto s = t.scenario();
  auto complete = [&](Tick tick) {
    if (!t.control.complete_from(tick)) return false;
    for (std::size_t i = 0; i < s.tasks.size(); ++i)
      if (s.tasks[i].replayed && !t.data[i].complete_from(tick)) return false;
    return true;
  };
  for (const auto& c : t.checkpoints) {
    if (c.tick < w.t_min || c.tick > w.t_fail || !complete(c.tick)) continue;
    StartState st;
    st.t_start = c.tick;
    st.checkpoint = c;
    st.snapshots.resize(s.tasks.size());
    for (std::size_t i = 0; i < s.tasks.size(); ++i) {
      if (!s.tasks[i].replayed) continue;
      for (const auto& d : t.data[i])
        if (d.kind == DataKind::StateSnapshot && d.tick <= c.tick && d.instance == c.task_instances.at(i))
          st.snapshots[i] = d;
    }
    return st;
  }
  std::ostringstream msg;
  msg << "no checkpoint in [" << w.t_min << ", " << w.t_fail << "] has complete logs through t_fail ("
      << t.checkpoints.size() << " retained; grow the buffers or shorten the checkpoint period)";
  throw Error(ErrorCode::NoConsistentStart, msg.str());
}

std::string format_report(const PruneReport& report, const std::optional<StartState>& start) {
  std::ostringstream o;
  o << "window: t_min=" << report.window.t_min << " t_fail=" << report.window.t_fail << "\n";
  for (const auto& b : report.buffers)
    o << "  " << b.name << ": retained " << b.retained_before - b.discarded << ", pruned " << b.discarded
      << ", overwritten " << b.overwritten << "\n";
  if (start) {
    o << "start: checkpoint at tick " << start->t_start << "\n";
    for (std::size_t i = 0; i < start->snapshots.size(); ++i)
      if (start->snapshots[i])
        o << "  task " << i << ": instance " << start->snapshots[i]->instance << " snapshot at tick "
          << start->snapshots[i]->tick << "\n";
  }
  return o.str();
}

}  // namespace dreplay
