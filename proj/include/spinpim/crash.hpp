#pragma once

// Single-cut fault injection against a golden uninterrupted run.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spinpim/controller.hpp"

namespace spinpim {

enum class CutGranularity {
  Boundaries,  // start of every phase plus the end of the instruction
  Full,        // boundaries plus 0.25, 0.5 and 0.75 of every phase
};

std::vector<CutSpec> enumerate_cuts(std::span<const Instruction> program, CutGranularity granularity,
                                    PhaseOrder order = PhaseOrder::StoreActFirst,
                                    BackupScheme scheme = BackupScheme::DuplicatedPc);

struct CutOutcome {
  CutSpec cut;
  bool passed = false;
  RunStatus status = RunStatus::Halted;
  /// Instruction attempts beyond the golden run's.
  std::uint64_t extra_attempts = 0;
  std::optional<CellAddress> divergence;
  std::string message;
};

struct SweepReport {
  RunResult golden;
  std::vector<CutOutcome> outcomes;  // in enumeration order
  std::size_t passed = 0;
  std::uint64_t max_extra_attempts = 0;

  bool all_passed() const { return passed == outcomes.size(); }
  const CutOutcome* first_failure() const;
};

/// Runs `machine` once uninterrupted and once per cut; a cut passes when the
/// run halts with data tiles equal to the golden ones after at most one extra
/// instruction attempt. Runs are spread over `threads` workers (0 picks the
/// hardware concurrency); results do not depend on the thread count.
SweepReport crash_sweep(const Simulator& sim, const Machine& machine, const RunOptions& options,
                        std::span<const CutSpec> cuts, unsigned threads = 0);

}  // namespace spinpim
