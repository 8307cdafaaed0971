#include "spinpim/crash.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include <fmt/format.h>

namespace spinpim {

std::vector<CutSpec> enumerate_cuts(std::span<const Instruction> program, CutGranularity granularity,
                                    PhaseOrder order, BackupScheme scheme) {
  std::vector<CutSpec> cuts;
  for (std::size_t pc = 0; pc < program.size(); ++pc) {
    const auto phases = phases_for(program[pc], order, scheme);
    const auto idx = static_cast<std::uint32_t>(pc);
    for (Phase p : phases) {
      cuts.push_back({idx, p, 0.0});
      if (granularity == CutGranularity::Full) {
        for (double f : {0.25, 0.5, 0.75}) cuts.push_back({idx, p, f});
      }
    }
    cuts.push_back({idx, phases.back(), 1.0});
  }
  return cuts;
}

const CutOutcome* SweepReport::first_failure() const {
  const auto it = std::find_if(outcomes.begin(), outcomes.end(), [](const CutOutcome& o) { return !o.passed; });
  return it == outcomes.end() ? nullptr : &*it;
}

SweepReport crash_sweep(const Simulator& sim, const Machine& machine, const RunOptions& options,
                        std::span<const CutSpec> cuts, unsigned threads) {
  SweepReport report;
  RunOptions golden_opts = options;
  golden_opts.cut.reset();
  report.golden = sim.run(machine, golden_opts);
  if (report.golden.status != RunStatus::Halted) {
    throw ControllerError(fmt::format("golden run did not halt: {}", report.golden.message));
  }
  report.outcomes.resize(cuts.size());

  const auto evaluate = [&](std::size_t i) {
    RunOptions o = options;
    o.cut = cuts[i];
    // A cut that restarts execution from scratch would run forever; bound it
    // by a generous multiple of the golden time.
    o.max_time = std::min(options.max_time, 4.0 * report.golden.ledger.total_t + 10 * options.outage + 1e-3);
    const RunResult r = sim.run(machine, o);
    CutOutcome& out = report.outcomes[i];
    out.cut = cuts[i];
    out.status = r.status;
    out.message = r.message;
    out.extra_attempts = r.attempts > report.golden.attempts ? r.attempts - report.golden.attempts : 0;
    if (r.status == RunStatus::Halted) {
      out.divergence = r.machine.first_difference(report.golden.machine);
      if (out.divergence) {
        out.message = fmt::format("first divergent cell: tile {} row {} col {}", out.divergence->tile,
                                  out.divergence->row, out.divergence->col);
      } else if (out.extra_attempts > 1) {
        out.message = fmt::format("{} instructions re-executed", out.extra_attempts);
      }
    }
    out.passed = r.status == RunStatus::Halted && !out.divergence && out.extra_attempts <= 1;
  };

  unsigned n = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(1, cuts.size())));
  if (n <= 1) {
    for (std::size_t i = 0; i < cuts.size(); ++i) evaluate(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cuts.size(); i = next++) evaluate(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (const auto& o : report.outcomes) {
    report.passed += o.passed;
    report.max_extra_attempts = std::max(report.max_extra_attempts, o.extra_attempts);
  }
  return report;
}

}  // namespace spinpim
