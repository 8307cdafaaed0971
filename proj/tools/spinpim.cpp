// Command-line front end. Exit codes: 0 success, 1 usage or configuration
// error, 2 verification failure.

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "spinpim/compiler.hpp"
#include "spinpim/config.hpp"
#include "spinpim/crash.hpp"
#include "spinpim/svm.hpp"

using namespace spinpim;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kVerify = 2;

struct Overrides {
  std::string config;
  std::string program;
  std::string device;
  std::optional<double> duty;
  std::optional<double> freq;
  std::optional<double> budget;
  std::string throttle;
  std::string format;
  std::string out;
  std::optional<std::size_t> tiles;
  std::optional<std::uint64_t> seed;
  bool strict_preset = false;
  unsigned threads = 0;
  std::string svm_model, svm_layout, svm_inputs;

  void add_to(CLI::App& app) {
    app.add_option("-c,--config", config, "JSON run configuration");
    app.add_option("-p,--program", program, "program file (.bin binary, otherwise assembly)");
    app.add_option("--device", device, "device preset: modern_stt, future_stt, future_she");
    app.add_option("--duty", duty, "square-wave duty cycle in (0, 1]");
    app.add_option("--freq", freq, "square-wave frequency in Hz");
    app.add_option("--budget", budget, "power budget in W");
    app.add_option("--throttle", throttle, "static, per_instruction or off");
    app.add_option("--format", format, "report format: csv or json");
    app.add_option("-o,--out", out, "report path (default stdout)");
    app.add_option("--tiles", tiles, "data tiles");
    app.add_option("--seed", seed, "seed for sampled cut selection");
    app.add_flag("--strict-preset", strict_preset, "fault when an STT gate output is not preset");
    app.add_option("-j,--threads", threads, "worker threads (0 = hardware concurrency)");
    app.add_option("--svm-model", svm_model, "SVM model; with --svm-layout and --svm-inputs runs inference batches");
    app.add_option("--svm-layout", svm_layout, "layout JSON written by codegen-svm");
    app.add_option("--svm-inputs", svm_inputs, "CSV of label and features");
  }

  RunConfig resolve() const {
    RunConfig c = config.empty() ? RunConfig{} : load_run_config(config);
    if (!program.empty()) c.program = program;
    if (!device.empty()) c.device = parse_device(nlohmann::json(device));
    if (duty || freq) {
      const double f = freq.value_or(c.options.trace.kind() == PowerTrace::Kind::SquareWave ? c.options.trace.frequency() : 16e3);
      const double d = duty.value_or(c.duty() > 0 ? c.duty() : 1.0);
      try {
        c.options.trace = PowerTrace::square_wave(f, d, c.options.trace.on_power());
      } catch (const PowerError& e) {
        throw ConfigError(e.what());
      }
    }
    if (budget) c.options.throttle.budget_w = *budget;
    if (throttle == "off") {
      c.options.throttle.enabled = false;
    } else if (!throttle.empty()) {
      c.options.throttle.enabled = true;
      c.options.throttle.mode = parse_throttle_mode(throttle);
    }
    if (c.options.throttle.enabled) {
      try {
        c.options.throttle.validate();
      } catch (const PowerError& e) {
        throw ConfigError(e.what());
      }
    }
    if (format == "csv") c.format = ReportFormat::Csv;
    else if (format == "json") c.format = ReportFormat::Json;
    else if (!format.empty()) throw ConfigError(fmt::format("unknown report format '{}'", format));
    if (!out.empty()) c.out = out;
    if (tiles) c.tiles = *tiles;
    if (seed) c.seed = *seed;
    if (strict_preset) c.options.strict_preset = true;
    if (!svm_model.empty() || !svm_layout.empty() || !svm_inputs.empty()) {
      SvmRunSpec spec = c.svm.value_or(SvmRunSpec{});
      if (!svm_model.empty()) spec.model = svm_model;
      if (!svm_layout.empty()) spec.layout = svm_layout;
      if (!svm_inputs.empty()) spec.inputs = svm_inputs;
      if (spec.model.empty() || spec.layout.empty() || spec.inputs.empty()) {
        throw ConfigError("an SVM run needs a model, a layout and inputs");
      }
      c.svm = spec;
    }
    return c;
  }
};

void emit(const std::filesystem::path& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw ConfigError(fmt::format("cannot write '{}'", out.string()));
  f << text;
}

std::vector<Instruction> load_program_checked(const RunConfig& c) {
  if (c.program.empty()) throw ConfigError("no program given (--program or \"program\" in the config)");
  return load_program(c.program);
}

unsigned worker_count(unsigned requested, std::size_t jobs) {
  const unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(1, jobs)));
}

// Runs jobs on a pool; results land at their own index, so output order never
// depends on completion order.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
  const unsigned w = worker_count(threads, n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < w; ++k) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct Outcome {
  EnergyLedger ledger;
  RunStatus status = RunStatus::Halted;
  std::string message;
  std::optional<SvmRunResult> svm;
  std::size_t svm_mismatches = 0;
};

// One simulation per the config: either a program with explicit preloads or an
// SVM batch evaluation.
Outcome simulate(const RunConfig& c) {
  const Simulator sim(c.device, c.cost);
  Outcome o;
  if (c.svm) {
    const QuantizedModel q = quantize(load_model(c.svm->model));
    std::ifstream lf(c.svm->layout);
    if (!lf) throw ConfigError(fmt::format("cannot open '{}'", c.svm->layout.string()));
    const auto lj = nlohmann::json::parse(lf);
    SvmProgram sp;
    sp.layout = SvmLayout::from_json(lj.at("svm"));
    sp.program.target = parse_target(lj.at("target").get<std::string>());
    sp.program.instructions = load_program_checked(c);
    const auto samples = load_dataset(c.svm->inputs);
    std::vector<std::vector<std::uint8_t>> xs;
    for (const auto& s : samples) xs.push_back(s.x);
    auto r = run_svm(sim, c.options, sp, q, xs);
    o.ledger = r.ledger;
    o.status = r.status;
    o.message = r.message;
    for (std::size_t i = 0; i < r.inferences.size(); ++i) {
      o.svm_mismatches += r.inferences[i].scores != oracle_infer(q, xs[i]).scores;
    }
    o.svm = std::move(r);
    return o;
  }
  const auto program = load_program_checked(c);
  Machine m = Machine::create(InstructionMemory::from_program(program), c.tiles, c.device.is_she() ? CellVariant::SHE : CellVariant::STT);
  apply_preload(m, c.preload);
  const RunResult r = sim.run(std::move(m), c.options);
  o.ledger = r.ledger;
  o.status = r.status;
  o.message = r.message;
  return o;
}

std::string report(const RunConfig& c, const std::vector<std::pair<double, Outcome>>& rows) {
  if (c.format == ReportFormat::Csv) {
    std::string s = csv_header() + "\n";
    for (const auto& [duty, o] : rows) s += csv_row(duty, o.ledger) + "\n";
    return s;
  }
  auto arr = nlohmann::ordered_json::array();
  for (const auto& [duty, o] : rows) {
    auto j = nlohmann::ordered_json::parse(to_json(duty, o.ledger));
    j["Status"] = to_string(o.status);
    if (o.svm) {
      auto results = nlohmann::ordered_json::array();
      for (const auto& inf : o.svm->inferences) results.push_back({{"label", inf.label}, {"scores", inf.scores}});
      j["Svm"] = {{"runs", o.svm->runs}, {"oracle_mismatches", o.svm_mismatches}, {"results", results}};
    }
    arr.push_back(j);
  }
  return (rows.size() == 1 ? arr[0].dump(2) : arr.dump(2)) + "\n";
}

int finish_runs(const RunConfig& c, const std::vector<std::pair<double, Outcome>>& rows) {
  emit(c.out, report(c, rows));
  int code = kOk;
  for (const auto& [duty, o] : rows) {
    if (o.status != RunStatus::Halted) {
      std::cerr << fmt::format("duty {}: run {}: {}\n", duty, to_string(o.status), o.message);
      code = kVerify;
    }
    if (!o.ledger.consistent()) {
      std::cerr << fmt::format("duty {}: ledger categories do not sum to the total\n", duty);
      code = kVerify;
    }
    if (o.svm_mismatches) {
      std::cerr << fmt::format("duty {}: {} inputs disagree with the fixed-point oracle\n", duty, o.svm_mismatches);
      code = kVerify;
    }
  }
  return code;
}

int cmd_run(const Overrides& ov) {
  const RunConfig c = ov.resolve();
  return finish_runs(c, {{c.duty(), simulate(c)}});
}

int cmd_sweep(const Overrides& ov, const std::vector<double>& duties) {
  const RunConfig base = ov.resolve();
  std::vector<RunConfig> configs;
  for (double d : duties) {
    RunConfig c = base;
    try {
      c.options.trace = PowerTrace::square_wave(
          base.options.trace.kind() == PowerTrace::Kind::SquareWave ? base.options.trace.frequency() : 16e3, d,
          base.options.trace.on_power());
    } catch (const PowerError& e) {
      throw ConfigError(e.what());
    }
    configs.push_back(std::move(c));
  }
  std::vector<std::pair<double, Outcome>> rows(duties.size());
  std::vector<std::string> errors(duties.size());
  parallel_for(duties.size(), ov.threads, [&](std::size_t i) {
    try {
      rows[i] = {duties[i], simulate(configs[i])};
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& e : errors) {
    if (!e.empty()) throw ConfigError(e);
  }
  return finish_runs(base, rows);
}

int cmd_fuzz(const Overrides& ov, const std::string& granularity, const std::string& order, const std::string& scheme,
             std::size_t sample) {
  RunConfig c = ov.resolve();
  if (!order.empty()) c.options.order = parse_phase_order(order);
  if (!scheme.empty()) c.options.scheme = parse_backup_scheme(scheme);
  CutGranularity g;
  if (granularity == "boundaries") g = CutGranularity::Boundaries;
  else if (granularity == "full") g = CutGranularity::Full;
  else throw ConfigError(fmt::format("unknown granularity '{}'", granularity));
  if (c.svm) throw ConfigError("fuzz-crash takes a program with explicit preloads, not an SVM batch");

  const auto program = load_program_checked(c);
  Machine m = Machine::create(InstructionMemory::from_program(program), c.tiles,
                              c.device.is_she() ? CellVariant::SHE : CellVariant::STT);
  apply_preload(m, c.preload);
  auto cuts = enumerate_cuts(program, g, c.options.order, c.options.scheme);
  if (sample && sample < cuts.size()) {
    std::mt19937_64 rng(c.seed);
    std::shuffle(cuts.begin(), cuts.end(), rng);
    cuts.resize(sample);
    std::stable_sort(cuts.begin(), cuts.end(), [&](const CutSpec& a, const CutSpec& b) {
      return std::tie(a.instruction, a.phase, a.fraction) < std::tie(b.instruction, b.phase, b.fraction);
    });
  }
  const Simulator sim(c.device, c.cost);
  SweepReport rep;
  try {
    rep = crash_sweep(sim, m, c.options, cuts, ov.threads);
  } catch (const ControllerError& e) {
    std::cerr << e.what() << "\n";
    return kVerify;
  }

  std::string text;
  if (c.format == ReportFormat::Csv) {
    text = "Instruction,Phase,Fraction,Verdict,ExtraAttempts,Detail\n";
    for (const auto& o : rep.outcomes) {
      text += fmt::format("{},{},{},{},{},{}\n", o.cut.instruction, to_string(o.cut.phase), o.cut.fraction,
                          o.passed ? "PASS" : "FAIL", o.extra_attempts, o.message);
    }
    text += fmt::format("# {} of {} cuts passed; max extra attempts {}\n", rep.passed, rep.outcomes.size(),
                        rep.max_extra_attempts);
  } else {
    nlohmann::ordered_json j;
    j["cuts"] = rep.outcomes.size();
    j["passed"] = rep.passed;
    j["max_extra_attempts"] = rep.max_extra_attempts;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& o : rep.outcomes) {
      nlohmann::ordered_json e{{"instruction", o.cut.instruction},
                               {"phase", to_string(o.cut.phase)},
                               {"fraction", o.cut.fraction},
                               {"passed", o.passed},
                               {"extra_attempts", o.extra_attempts}};
      if (o.divergence) e["divergence"] = {{"tile", o.divergence->tile}, {"row", o.divergence->row}, {"col", o.divergence->col}};
      if (!o.message.empty()) e["detail"] = o.message;
      arr.push_back(e);
    }
    j["outcomes"] = arr;
    text = j.dump(2) + "\n";
  }
  emit(c.out, text);
  if (const auto* f = rep.first_failure()) {
    std::cerr << fmt::format("FAIL {}: {}\n", to_string(f->cut), f->message);
    return kVerify;
  }
  return kOk;
}

int cmd_margin(const std::string& config, const std::string& device, const std::optional<double>& r_p,
               const std::optional<double>& r_ap, const std::optional<double>& r_tr) {
  DeviceParams d = DeviceParams::future_stt();
  nlohmann::json dj = nlohmann::json::object();
  if (!config.empty()) {
    std::ifstream f(config);
    if (!f) throw ConfigError(fmt::format("cannot open '{}'", config));
    const auto j = nlohmann::json::parse(f, nullptr, true, true);
    if (j.contains("device")) dj = j.at("device").is_string() ? nlohmann::json{{"preset", j.at("device")}} : j.at("device");
  }
  if (!device.empty()) dj["preset"] = device;
  if (r_p) dj["r_p"] = *r_p;
  if (r_ap) dj["r_ap"] = *r_ap;
  if (r_tr) dj["r_transistor"] = *r_tr;
  if (!dj.empty()) {
    // Degenerate parameter sets are legal input here: the table reports them infeasible.
    d = DeviceParams::preset(dj.value("preset", std::string("future_stt")));
    if (dj.contains("r_p")) d.r_p = dj["r_p"].get<double>();
    if (dj.contains("r_ap")) d.r_ap = dj["r_ap"].get<double>();
    if (dj.contains("r_transistor")) d.r_transistor = dj["r_transistor"].get<double>();
  }
  std::cout << fmt::format("{:<6} {:>12} {:>12}  {}\n", "gate", "v_min_mV", "v_max_mV", "feasible");
  bool all = true;
  for (GateName g : kAllGates) {
    const VoltageWindow w = solve_drive_voltage(gate_semantics(g), d);
    all = all && w.feasible;
    std::cout << fmt::format("{:<6} {:>12.4f} {:>12.4f}  {}\n", to_string(g), w.v_min * 1e3, w.v_max * 1e3,
                             w.feasible ? "yes" : "NO");
  }
  return all ? kOk : kVerify;
}

std::string base_name(const std::filesystem::path& out) { return out.string(); }

void write_program(const std::filesystem::path& path, const std::vector<Instruction>& program) {
  if (path.extension() == ".bin") {
    write_program_binary(path, encode_program(program));
  } else {
    emit(path, disassemble(program));
  }
}

int cmd_codegen_svm(const std::string& model_path, const std::string& target, std::size_t batch, bool binarized,
                    std::size_t max_tiles, const std::string& out, const std::string& layout_out) {
  const SvmModel model = load_model(model_path);
  QuantizationReport rep;
  const QuantizedModel q = quantize(model, &rep);
  SvmCodegenConfig cfg;
  cfg.target = parse_target(target);
  cfg.batch = batch;
  cfg.binarized = binarized;
  cfg.max_tiles = max_tiles;
  const SvmProgram sp = codegen_svm(q, cfg);
  write_program(out, sp.program.instructions);
  nlohmann::ordered_json j = sp.program.metadata_json();
  j["tiles"] = sp.layout.n_tiles();
  j["quantization"] = {{"shift", q.shift},
                       {"c0", q.c0},
                       {"scale", rep.scale},
                       {"max_alpha_error", rep.max_alpha_error},
                       {"max_sv_error", rep.max_sv_error},
                       {"max_rho_error", rep.max_rho_error}};
  j["svm"] = sp.layout.to_json();
  const std::string lpath = layout_out.empty() ? base_name(std::filesystem::path(out).replace_extension(".layout.json")) : layout_out;
  emit(lpath, j.dump(2) + "\n");
  std::cerr << fmt::format("{} instructions, {} tiles, layout in {}\n", sp.program.instructions.size(),
                           sp.layout.n_tiles(), lpath);
  return kOk;
}

int cmd_kernel(const std::string& name, std::size_t width, const std::string& target, std::uint16_t lanes,
               const std::string& out, const std::string& layout_out) {
  const Program p = build_kernel(parse_kernel(name), width, parse_target(target), lanes);
  write_program(out, p.instructions);
  const std::string lpath = layout_out.empty() ? base_name(std::filesystem::path(out).replace_extension(".layout.json")) : layout_out;
  emit(lpath, p.metadata_json().dump(2) + "\n");
  return kOk;
}

std::vector<double> parse_duties(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("bad duty '{}'", tok));
    }
  }
  if (out.empty()) throw ConfigError("no duty cycles given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spintronic processing-in-memory simulator and compiler"};
  app.require_subcommand(1);

  Overrides run_ov;
  auto* run = app.add_subcommand("run", "simulate a program and report time and energy");
  run_ov.add_to(*run);

  Overrides sweep_ov;
  std::string duties = "1,0.25,0.01";
  auto* sweep = app.add_subcommand("sweep-duty", "run the same configuration across duty cycles");
  sweep_ov.add_to(*sweep);
  sweep->add_option("--duties", duties, "comma-separated duty cycles")->capture_default_str();

  Overrides fuzz_ov;
  std::string granularity = "full", order, scheme;
  std::size_t sample = 0;
  auto* fuzz = app.add_subcommand("fuzz-crash", "inject one power cut per cut point and compare with the golden run");
  fuzz_ov.add_to(*fuzz);
  fuzz->add_option("--granularity", granularity, "boundaries or full")->capture_default_str();
  fuzz->add_option("--order", order, "store_act_first or store_act_last");
  fuzz->add_option("--scheme", scheme, "duplicated_pc or single_pc");
  fuzz->add_option("--sample", sample, "test a seeded random subset of this many cuts");

  std::string margin_config, margin_device;
  std::optional<double> r_p, r_ap, r_tr;
  auto* margin = app.add_subcommand("margin", "drive-voltage windows for every gate");
  margin->add_option("-c,--config", margin_config, "JSON configuration with a device entry");
  margin->add_option("--device", margin_device, "device preset");
  margin->add_option("--r-p", r_p, "override parallel resistance (ohm)");
  margin->add_option("--r-ap", r_ap, "override anti-parallel resistance (ohm)");
  margin->add_option("--r-transistor", r_tr, "override access transistor resistance (ohm)");

  std::string asm_in, asm_out;
  auto* assemble_cmd = app.add_subcommand("assemble", "assembly text to binary");
  assemble_cmd->add_option("input", asm_in, "assembly file")->required();
  assemble_cmd->add_option("-o,--out", asm_out, "binary output")->required();

  std::string dis_in, dis_out;
  auto* disassemble_cmd = app.add_subcommand("disassemble", "binary to assembly text");
  disassemble_cmd->add_option("input", dis_in, "binary program")->required();
  disassemble_cmd->add_option("-o,--out", dis_out, "assembly output (default stdout)");

  std::string model_path, target = "stt", svm_out, svm_layout;
  std::size_t batch = 1, max_tiles = kMaxDataTiles;
  bool binarized = false;
  auto* codegen = app.add_subcommand("codegen-svm", "compile an SVM model");
  codegen->add_option("model", model_path, "model text file")->required();
  codegen->add_option("--target", target, "stt or she")->capture_default_str();
  codegen->add_option("--batch", batch, "inputs per run")->capture_default_str();
  codegen->add_flag("--binarized", binarized, "single-bit features, AND + popcount dot product");
  codegen->add_option("--max-tiles", max_tiles, "tile budget")->capture_default_str();
  codegen->add_option("-o,--out", svm_out, "program output (.bin or assembly)")->required();
  codegen->add_option("--layout", svm_layout, "layout JSON output (default next to the program)");

  std::string kernel_name, kernel_target = "stt", kernel_out, kernel_layout;
  std::size_t kernel_width = 8;
  std::uint16_t kernel_lanes = kTileCols;
  auto* kernel = app.add_subcommand("kernel", "emit an arithmetic kernel: fulladd, add, sub, mult, bdot");
  kernel->add_option("name", kernel_name, "kernel name")->required();
  kernel->add_option("--width", kernel_width, "operand width or feature count")->capture_default_str();
  kernel->add_option("--target", kernel_target, "stt or she")->capture_default_str();
  kernel->add_option("--lanes", kernel_lanes, "active columns")->capture_default_str();
  kernel->add_option("-o,--out", kernel_out, "program output (.bin or assembly)")->required();
  kernel->add_option("--layout", kernel_layout, "layout JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(run_ov);
    if (*sweep) return cmd_sweep(sweep_ov, parse_duties(duties));
    if (*fuzz) return cmd_fuzz(fuzz_ov, granularity, order, scheme, sample);
    if (*margin) return cmd_margin(margin_config, margin_device, r_p, r_ap, r_tr);
    if (*assemble_cmd) {
      std::ifstream f(asm_in);
      if (!f) throw ConfigError(fmt::format("cannot open '{}'", asm_in));
      std::stringstream ss;
      ss << f.rdbuf();
      write_program_binary(asm_out, encode_program(assemble(ss.str())));
      return kOk;
    }
    if (*disassemble_cmd) {
      emit(dis_out, disassemble(decode_program(read_program_binary(dis_in))));
      return kOk;
    }
    if (*codegen) return cmd_codegen_svm(model_path, target, batch, binarized, max_tiles, svm_out, svm_layout);
    if (*kernel) return cmd_kernel(kernel_name, kernel_width, kernel_target, kernel_lanes, kernel_out, kernel_layout);
  } catch (const AssemblyError& e) {
    std::cerr << fmt::format("error: line {}, column {}: {}\n", e.line(), e.column(), e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
