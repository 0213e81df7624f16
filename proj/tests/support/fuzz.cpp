#include "fuzz.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <vector>

namespace dreplay::testing {
namespace {

class Gen {
 public:
  Gen(std::uint64_t seed, const FuzzOptions& o) : rng_(seed), o_(o) {}

  std::string run() {
    int nq = pick(1, o_.max_queues);
    int nsem = pick(0, o_.max_semaphores);
    int nport = pick(0, 2);
    int ntask = pick(o_.min_tasks, o_.max_tasks);
    limit_ = pick(300, 2000);

    out_ << "scenario fuzz\nseed " << pick(0, 1 << 30) << "\nlimit " << limit_ << "\n";
    // Queue 0 is always received by replayed tasks; others may belong to
    // the unreplayed side.
    for (int q = 0; q < nq; ++q) {
      bool unreplayed = o_.allow_unreplayed && q > 0 && chance(0.25);
      queue_replayed_.push_back(!unreplayed);
      out_ << "queue q" << q << " capacity " << pick(1, 4) << " msgsize " << pick(1, 4) << "\n";
    }
    // Waiters on one semaphore all sit on the same side of the replay boundary.
    for (int s = 0; s < nsem; ++s) {
      out_ << "semaphore s" << s << " count " << pick(0, 2) << "\n";
      sem_replayed_.push_back(!(o_.allow_unreplayed && chance(0.25)));
    }
    nsem_ = nsem;
    for (int p = 0; p < nport; ++p) {
      out_ << "port p" << p;
      if (chance(0.5)) {
        out_ << " random\n";
      } else {
        out_ << " values";
        for (int i = pick(1, 5); i > 0; --i) out_ << " " << pick(0, 255);
        out_ << "\n";
      }
    }
    nport_ = nport;
    nq_ = nq;

    for (int t = 0; t < ntask; ++t) task(t);

    int nirq = pick(0, o_.max_interrupts);
    std::vector<int> ticks;
    for (int i = 0; i < nirq; ++i) ticks.push_back(pick(1, limit_ - 1));
    std::sort(ticks.begin(), ticks.end());
    ticks.erase(std::unique(ticks.begin(), ticks.end()), ticks.end());
    for (int tick : ticks) {
      out_ << "at " << tick << " post q" << pick(0, nq - 1) << " ";
      if (chance(0.5)) out_ << "random\n";
      else out_ << pick(0, 255) << "\n";
    }
    return out_.str();
  }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  std::string indent() const { return std::string(2 * (depth_ + 1), ' '); }
  std::string var() { return "v" + std::to_string(pick(0, state_ - 1)); }

  int own_queue() {
    std::vector<int> qs;
    for (int q = 0; q < nq_; ++q)
      if (queue_replayed_[q] == replayed_) qs.push_back(q);
    return qs[pick(0, static_cast<int>(qs.size()) - 1)];
  }

  void task(int t) {
    int activation = pick(0, nq_ - 1);
    replayed_ = queue_replayed_[activation];
    state_ = pick(2, 8);
    out_ << "task t" << t << " priority " << pick(0, 5) << " state " << state_ << " activation q" << activation;
    if (chance(0.3)) out_ << " init " << pick(0, state_ - 1);
    if (!replayed_) out_ << " noreplay";
    out_ << "\n";
    depth_ = 0;
    // Periodic tasks keep preempting the others for the whole run.
    if (chance(0.4)) {
      out_ << indent() << "loop " << pick(5, 60) << "\n";
      ++depth_;
      out_ << indent() << "delay " << pick(3, 40) << "\n";
      block(pick(1, 4));
      --depth_;
      out_ << indent() << "end\n";
    } else {
      block(pick(2, 7));
    }
    out_ << "endtask\n";
  }

  void block(int n) {
    for (int i = 0; i < n; ++i) statement();
  }

  void statement() {
    int r = pick(0, 99);
    auto in = indent();
    if (r < 18) {
      out_ << in << "compute " << pick(1, 6) << "\n";
    } else if (r < 32) {
      out_ << in << "set " << var() << " = " << operand();
      for (int k = pick(0, 2); k > 0; --k) out_ << " " << "+-*&|^"[pick(0, 5)] << " " << operand();
      out_ << "\n";
    } else if (r < 46) {
      out_ << in << "send q" << pick(0, nq_ - 1) << " " << operand() << "\n";
    } else if (r < 54) {
      out_ << in << "recv q" << own_queue() << " " << var() << "\n";
    } else if (r < 62 && own_sem() >= 0) {
      int s = own_sem();
      out_ << in << "sem_wait s" << s << "\n" << in << "compute " << pick(1, 3) << "\n" << in << "sem_signal s" << s
           << "\n";
    } else if (r < 66 && nsem_ > 0) {
      out_ << in << "sem_signal s" << pick(0, nsem_ - 1) << "\n";
    } else if (r < 72) {
      out_ << in << "delay " << pick(1, 15) << "\n";
    } else if (r < 78 && nport_ > 0) {
      out_ << in << "read p" << pick(0, nport_ - 1) << " " << var() << "\n";
    } else if (r < 88 && depth_ < 2) {
      out_ << in << "loop " << pick(2, 4) << "\n";
      ++depth_;
      block(pick(1, 3));
      --depth_;
      out_ << in << "end\n";
    } else if (r < 97 && depth_ < 2) {
      static const char* cmps[] = {"==", "!=", "<", "<=", ">", ">="};
      out_ << in << "if " << var() << " " << cmps[pick(0, 5)] << " " << pick(0, 255) << "\n";
      ++depth_;
      if (o_.allow_fail && chance(0.03)) out_ << indent() << "fail\n";
      else block(pick(1, 2));
      --depth_;
      out_ << in << "end\n";
    } else {
      out_ << in << "compute 1\n";
    }
  }

  std::string operand() { return chance(0.6) ? var() : std::to_string(pick(0, 255)); }

  std::mt19937_64 rng_;
  FuzzOptions o_;
  std::ostringstream out_;
  int own_sem() {
    std::vector<int> ss;
    for (int s = 0; s < nsem_; ++s)
      if (sem_replayed_[s] == replayed_) ss.push_back(s);
    return ss.empty() ? -1 : ss[static_cast<std::size_t>(pick(0, static_cast<int>(ss.size()) - 1))];
  }

  std::vector<bool> queue_replayed_;
  std::vector<bool> sem_replayed_;
  int limit_ = 0, nq_ = 0, nsem_ = 0, nport_ = 0, state_ = 2, depth_ = 0;
  bool replayed_ = true;
};

}  // namespace

std::string generate_scenario(std::uint64_t seed, const FuzzOptions& opts) { return Gen(seed, opts).run(); }

}  // namespace dreplay::testing
