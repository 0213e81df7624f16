// Writes a trace of the given scenario whose last task's data ring was
// never written.
#include <fstream>
#include <iostream>
#include <sstream>

#include "dreplay/recorder/recorder.hpp"
#include "dreplay/recorder/trace.hpp"
#include "dreplay/sim/scenario.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: empty-trace SCENARIO OUT\n";
    return 2;
  }
  std::ifstream in(argv[1]);
  std::stringstream ss;
  ss << in.rdbuf();
  auto s = dreplay::sim::parse_scenario(ss.str());
  auto t = dreplay::record(s, dreplay::RecorderConfig::defaults_for(s));
  auto& ring = t.data.back();
  ring = dreplay::RingBuffer<dreplay::DataFlowRecord>(ring.capacity());
  dreplay::save_trace(argv[2], t);
}
