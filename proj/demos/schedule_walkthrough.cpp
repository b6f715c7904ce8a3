// Walks a small kernel through the schedule phase by phase, printing the IR
// after each one and the final C, then double-checks the whole chain against
// the interpreter. A compact tour of the library surface.

#include <iostream>

#include "ukgen/commands.hpp"

using namespace ukgen;

int main() {
  KernelSpec spec = spec_for(4, 4);
  std::cout << "== base proc ==\n" << pretty_print(base_proc(spec)) << "\n";

  Scheduler s = schedule_kernel(spec);
  for (const auto& [label, proc] : s.phase_procs())
    std::cout << "== after " << label << " ==\n" << pretty_print(proc) << "\n";

  std::cout << "== emitted C ==\n" << emit(s.proc(), s.lib()).kernel_source << "\n";

  std::cout << "== checking every step against the interpreter ==\n";
  bool all_ok = true;
  const auto& history = s.history();
  for (size_t i = 0; i + 1 < history.size(); ++i) {
    if (history[i].size_params != history[i + 1].size_params) continue;
    EquivReport rep =
        equivalent(history[i], history[i + 1], 10, ValueMode::integer_exact, s.lib());
    if (!rep.equivalent) {
      std::cout << rep.to_line() << "\n";
      all_ok = false;
    }
  }
  std::cout << (all_ok ? "all steps equivalent\n" : "steps differ!\n");
  return all_ok ? 0 : 1;
}
