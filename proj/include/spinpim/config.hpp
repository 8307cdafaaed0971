#pragma once

// JSON run configuration shared by the command-line tools.
//
// {
//   "device":   "future_stt" | {"preset": "future_stt", "r_p": 1000, ...},
//   "cost":     {"v_drive": 0, "peripheral_share": 0.5, "t_setup": 5e-10, "backup_energy_per_bit": -1},
//   "power":    {"freq_hz": 16000, "duty": 1.0, "on_power_w": 0} | {"intervals_csv": "trace.csv"},
//   "throttle": {"budget_w": 2e-4, "mode": "static" | "per_instruction", "enabled": true},
//   "program":  "prog.asm",
//   "tiles":    1,
//   "preload":  [{"tile": 0, "cols": [0, 1], "rows": [0, 2, 4], "value": 5}],
//   "svm":      {"model": "m.txt", "layout": "m.layout.json", "inputs": "x.csv"},
//   "report":   {"format": "csv" | "json", "out": "report.csv"},
//   "run":      {"completion": "deterministic" | "early_switch", "order": "store_act_first" | "store_act_last",
//                "scheme": "duplicated_pc" | "single_pc", "strict_preset": false, "max_time": 60, "outage": 1e-6},
//   "seed":     0
// }
//
// Every key is optional. Relative paths resolve against the config file's directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinpim/controller.hpp"
#include "spinpim/device.hpp"

namespace spinpim {

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Writes `value` LSB first into `rows` of each listed column.
struct PreloadEntry {
  std::uint16_t tile = 0;
  std::vector<std::uint16_t> cols;
  std::vector<std::uint16_t> rows;
  std::uint64_t value = 0;
};

struct SvmRunSpec {
  std::filesystem::path model;
  std::filesystem::path layout;
  std::filesystem::path inputs;
};

enum class ReportFormat : std::uint8_t { Csv, Json };

struct RunConfig {
  DeviceParams device = DeviceParams::future_stt();
  CostConfig cost;
  RunOptions options;
  std::filesystem::path program;
  std::size_t tiles = 1;
  std::vector<PreloadEntry> preload;
  std::optional<SvmRunSpec> svm;
  ReportFormat format = ReportFormat::Csv;
  std::filesystem::path out;  // empty: stdout
  std::uint64_t seed = 0;

  double duty() const { return options.trace.kind() == PowerTrace::Kind::SquareWave ? options.trace.duty() : 0.0; }
};

DeviceParams parse_device(const nlohmann::json& j);
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies the preload entries to a machine; throws ConfigError when an entry
/// is out of range.
void apply_preload(Machine& machine, const std::vector<PreloadEntry>& entries);

ThrottleMode parse_throttle_mode(const std::string& name);
CompletionModel parse_completion(const std::string& name);
PhaseOrder parse_phase_order(const std::string& name);
BackupScheme parse_backup_scheme(const std::string& name);

}  // namespace spinpim
