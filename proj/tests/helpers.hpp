#pragma once

#include <functional>

#include "spinpim/compiler.hpp"
#include "spinpim/controller.hpp"

namespace spinpim::testing {

inline DeviceParams device_for(Target t) {
  return t == Target::STT ? DeviceParams::future_stt() : DeviceParams::future_she();
}

inline Machine machine_for(const std::vector<Instruction>& program, Target target, std::size_t tiles = 1) {
  return Machine::create(InstructionMemory::from_program(program), tiles, variant_of(target));
}

/// Runs on continuous power with default throttling and strict preset checks.
inline RunResult run_program(const std::vector<Instruction>& program, Target target,
                             const std::function<void(Machine&)>& preload, std::size_t tiles = 1) {
  Machine m = machine_for(program, target, tiles);
  preload(m);
  RunOptions opt;
  opt.strict_preset = target == Target::STT;
  return Simulator(device_for(target)).run(std::move(m), opt);
}

}  // namespace spinpim::testing
