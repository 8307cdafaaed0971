#include "spinpim/config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

namespace spinpim {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

const std::set<std::string> kTopKeys{"device", "cost", "power", "throttle", "program", "tiles",
                                     "preload", "svm", "report", "run", "seed"};

}  // namespace

ThrottleMode parse_throttle_mode(const std::string& name) {
  if (name == "static") return ThrottleMode::Static;
  if (name == "per_instruction") return ThrottleMode::PerInstruction;
  throw ConfigError(fmt::format("unknown throttle mode '{}'", name));
}

CompletionModel parse_completion(const std::string& name) {
  if (name == "deterministic") return CompletionModel::Deterministic;
  if (name == "early_switch") return CompletionModel::EarlySwitch;
  throw ConfigError(fmt::format("unknown completion model '{}'", name));
}

PhaseOrder parse_phase_order(const std::string& name) {
  if (name == "store_act_first") return PhaseOrder::StoreActFirst;
  if (name == "store_act_last") return PhaseOrder::StoreActLast;
  throw ConfigError(fmt::format("unknown phase order '{}'", name));
}

BackupScheme parse_backup_scheme(const std::string& name) {
  if (name == "duplicated_pc") return BackupScheme::DuplicatedPc;
  if (name == "single_pc") return BackupScheme::SinglePc;
  throw ConfigError(fmt::format("unknown backup scheme '{}'", name));
}

DeviceParams parse_device(const nlohmann::json& j) {
  try {
    if (j.is_string()) return DeviceParams::preset(j.get<std::string>());
    DeviceParams d = DeviceParams::preset(j.value("preset", std::string("future_stt")));
    maybe(j, "r_p", d.r_p);
    maybe(j, "r_ap", d.r_ap);
    maybe(j, "t_switch", d.t_switch);
    maybe(j, "i_switch", d.i_switch);
    maybe(j, "r_transistor", d.r_transistor);
    maybe(j, "r_she_channel", d.r_she_channel);
    d.validate();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("device: {}", e.what()));
  } catch (const DeviceError& e) {
    throw ConfigError(fmt::format("device: {}", e.what()));
  }
}

RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kTopKeys.count(key)) throw ConfigError(fmt::format("unknown configuration key '{}'", key));
  }
  RunConfig c;
  try {
    if (j.contains("device")) c.device = parse_device(j.at("device"));
    if (j.contains("cost")) {
      const auto& k = j.at("cost");
      maybe(k, "v_drive", c.cost.v_drive);
      maybe(k, "peripheral_share", c.cost.peripheral_share);
      maybe(k, "t_setup", c.cost.t_setup);
      maybe(k, "backup_energy_per_bit", c.cost.backup_energy_per_bit);
    }
    if (j.contains("power")) {
      const auto& p = j.at("power");
      const double on_power = p.value("on_power_w", 0.0);
      if (p.contains("intervals_csv")) {
        c.options.trace = PowerTrace::load_intervals_csv(resolve(base, p.at("intervals_csv").get<std::string>()), on_power);
      } else {
        c.options.trace = PowerTrace::square_wave(p.value("freq_hz", 16e3), p.value("duty", 1.0), on_power);
      }
    }
    if (j.contains("throttle")) {
      const auto& t = j.at("throttle");
      maybe(t, "budget_w", c.options.throttle.budget_w);
      maybe(t, "enabled", c.options.throttle.enabled);
      if (t.contains("mode")) c.options.throttle.mode = parse_throttle_mode(t.at("mode").get<std::string>());
      c.options.throttle.validate();
    }
    if (j.contains("program")) c.program = resolve(base, j.at("program").get<std::string>());
    maybe(j, "tiles", c.tiles);
    if (c.tiles == 0 || c.tiles > kMaxDataTiles) throw ConfigError(fmt::format("tiles must be in 1..{}", kMaxDataTiles));
    if (j.contains("preload")) {
      for (const auto& e : j.at("preload")) {
        PreloadEntry p;
        p.tile = e.value("tile", std::uint16_t{0});
        if (e.contains("col")) p.cols.push_back(e.at("col").get<std::uint16_t>());
        if (e.contains("cols")) {
          const auto more = e.at("cols").get<std::vector<std::uint16_t>>();
          p.cols.insert(p.cols.end(), more.begin(), more.end());
        }
        p.rows = e.at("rows").get<std::vector<std::uint16_t>>();
        p.value = e.at("value").get<std::uint64_t>();
        c.preload.push_back(std::move(p));
      }
    }
    if (j.contains("svm")) {
      const auto& s = j.at("svm");
      c.svm = SvmRunSpec{resolve(base, s.at("model").get<std::string>()), resolve(base, s.at("layout").get<std::string>()),
                         resolve(base, s.at("inputs").get<std::string>())};
    }
    if (j.contains("report")) {
      const auto& r = j.at("report");
      const auto fmt_name = r.value("format", std::string("csv"));
      if (fmt_name == "csv") c.format = ReportFormat::Csv;
      else if (fmt_name == "json") c.format = ReportFormat::Json;
      else throw ConfigError(fmt::format("unknown report format '{}'", fmt_name));
      if (r.contains("out")) c.out = resolve(base, r.at("out").get<std::string>());
    }
    if (j.contains("run")) {
      const auto& r = j.at("run");
      if (r.contains("completion")) c.options.completion = parse_completion(r.at("completion").get<std::string>());
      if (r.contains("order")) c.options.order = parse_phase_order(r.at("order").get<std::string>());
      if (r.contains("scheme")) c.options.scheme = parse_backup_scheme(r.at("scheme").get<std::string>());
      maybe(r, "strict_preset", c.options.strict_preset);
      maybe(r, "max_time", c.options.max_time);
      maybe(r, "outage", c.options.outage);
      if (!(c.options.max_time > 0.0) || !(c.options.outage > 0.0)) {
        throw ConfigError("max_time and outage must be positive");
      }
    }
    maybe(j, "seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("configuration: {}", e.what()));
  } catch (const PowerError& e) {
    throw ConfigError(fmt::format("power: {}", e.what()));
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_run_config(j, path.parent_path());
}

void apply_preload(Machine& machine, const std::vector<PreloadEntry>& entries) {
  for (const auto& e : entries) {
    if (e.tile >= machine.tiles.size()) throw ConfigError(fmt::format("preload addresses missing tile {}", e.tile));
    if (e.rows.size() > 64) throw ConfigError("preload values are at most 64 bits wide");
    for (auto col : e.cols) {
      if (col >= kTileCols) throw ConfigError(fmt::format("preload column {} out of range", col));
      for (std::size_t i = 0; i < e.rows.size(); ++i) {
        if (e.rows[i] >= kTileRows) throw ConfigError(fmt::format("preload row {} out of range", e.rows[i]));
        machine.tiles[e.tile].set_cell(e.rows[i], col, (e.value >> i) & 1u);
      }
    }
  }
}

}  // namespace spinpim
