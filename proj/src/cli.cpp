#include "fdcell/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

namespace fdcell {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& what) { throw CliError(exit_code::kSchema, what); }

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) schema_error(where + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.contains(key)) schema_error(where + ": unknown key '" + key + "'");
}

double number(const json& j, const std::string& key) {
  if (!j.is_number()) schema_error(key + ": expected a number");
  return j.get<double>();
}

double positive(const json& j, const std::string& key) {
  const double v = number(j, key);
  if (!(v > 0.0)) schema_error(key + ": must be positive");
  return v;
}

long long integer(const json& j, const std::string& key) {
  if (!j.is_number_integer()) schema_error(key + ": expected an integer");
  return j.get<long long>();
}

int positive_int(const json& j, const std::string& key) {
  const long long v = integer(j, key);
  if (v < 1) schema_error(key + ": must be >= 1");
  if (v > 1'000'000'000LL) throw CliError(exit_code::kRange, key + ": too large");
  return static_cast<int>(v);
}

bool boolean(const json& j, const std::string& key) {
  if (!j.is_boolean()) schema_error(key + ": expected true or false");
  return j.get<bool>();
}

std::string text(const json& j, const std::string& key) {
  if (!j.is_string()) schema_error(key + ": expected a string");
  return j.get<std::string>();
}

double cancellation(const json& j, const std::string& key) {
  if (j.is_string()) {
    try {
      return parse_cancellation(j.get<std::string>());
    } catch (const ConfigError& e) {
      schema_error(key + ": " + e.what());
    }
  }
  const double v = number(j, key);
  if (v < 0.0) throw CliError(exit_code::kRange, key + ": cancellation must be >= 0 dB");
  return v;
}

Variant variant(const json& j, const std::string& key) {
  try {
    return variant_from_string(text(j, key));
  } catch (const ConfigError& e) {
    schema_error(key + ": " + e.what());
  }
}

double watts_in_range(const json& j, const std::string& key) {
  const double w = positive(j, key);
  if (w > 10.0) throw CliError(exit_code::kRange, key + ": above 10 W");
  return watts_to_dbm(w);
}

}  // namespace

void ExperimentSpec::validate() const {
  if (sweep_cancellation.empty()) throw CliError(exit_code::kRange, "sweep_cancellation is empty");
  if (variants.empty()) throw CliError(exit_code::kRange, "variants is empty");
  try {
    base.validate();
  } catch (const ConfigError& e) {
    throw CliError(exit_code::kRange, e.what());
  }
}

ExperimentSpec parse_config_text(const std::string& source) {
  ExperimentSpec spec;
  if (source.find_first_not_of(" \t\r\n") == std::string::npos) return spec;
  json j;
  try {
    j = json::parse(source);
  } catch (const json::parse_error& e) {
    schema_error(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config",
             {"scenario", "variant", "variants", "cancellation_db", "sweep_cancellation", "slots", "drops", "seed",
              "bandwidth_hz", "beta", "p_bs_max_w", "p_ue_max_w", "kappa", "slot_duration_s", "below_min_se",
              "output_dir", "jobs", "trace", "indoor", "outdoor", "power"});
  RunConfig& c = spec.base;
  if (j.contains("scenario")) {
    const std::string s = text(j["scenario"], "scenario");
    if (s != "indoor" && s != "outdoor") schema_error("scenario: expected indoor or outdoor");
    c.scenario = scenario_from_string(s);
  }
  if (j.contains("variant")) c.variant = variant(j["variant"], "variant");
  if (j.contains("variants")) {
    if (!j["variants"].is_array()) schema_error("variants: expected an array");
    spec.variants.clear();
    for (const auto& v : j["variants"]) spec.variants.push_back(variant(v, "variants"));
  } else if (j.contains("variant")) {
    spec.variants = {c.variant};
  }
  if (j.contains("cancellation_db")) c.cancellation_db = cancellation(j["cancellation_db"], "cancellation_db");
  if (j.contains("sweep_cancellation")) {
    if (!j["sweep_cancellation"].is_array()) schema_error("sweep_cancellation: expected an array");
    spec.sweep_cancellation.clear();
    for (const auto& v : j["sweep_cancellation"])
      spec.sweep_cancellation.push_back(cancellation(v, "sweep_cancellation"));
  }
  if (j.contains("slots")) c.slots = positive_int(j["slots"], "slots");
  if (j.contains("drops")) c.drops = positive_int(j["drops"], "drops");
  if (j.contains("seed")) {
    const auto& s = j["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      schema_error("seed: expected a non-negative integer");
    c.seed = s.get<std::uint64_t>();
    spec.seed_explicit = true;
  }
  if (j.contains("bandwidth_hz")) c.bandwidth_hz = positive(j["bandwidth_hz"], "bandwidth_hz");
  if (j.contains("beta")) {
    c.beta = positive(j["beta"], "beta");
    if (c.beta >= 1.0) throw CliError(exit_code::kRange, "beta: must be < 1");
  }
  if (j.contains("p_bs_max_w")) c.p_dl_max_dbm = watts_in_range(j["p_bs_max_w"], "p_bs_max_w");
  if (j.contains("p_ue_max_w")) c.p_ul_max_dbm = watts_in_range(j["p_ue_max_w"], "p_ue_max_w");
  if (j.contains("kappa")) {
    c.kappa = number(j["kappa"], "kappa");
    if (c.kappa < 0.0) throw CliError(exit_code::kRange, "kappa: must be >= 0");
  }
  if (j.contains("slot_duration_s")) c.slot_duration_s = positive(j["slot_duration_s"], "slot_duration_s");
  if (j.contains("below_min_se")) {
    const std::string s = text(j["below_min_se"], "below_min_se");
    if (s == "outage") c.below_min = BelowMinSe::Outage;
    else if (s == "floor") c.below_min = BelowMinSe::Floor;
    else schema_error("below_min_se: expected outage or floor");
  }
  if (j.contains("output_dir")) spec.output_dir = text(j["output_dir"], "output_dir");
  if (j.contains("jobs")) {
    const long long n = integer(j["jobs"], "jobs");
    if (n < 0) schema_error("jobs: must be >= 0");
    c.jobs = static_cast<int>(n);
  }
  if (j.contains("trace")) c.trace = boolean(j["trace"], "trace");
  if (j.contains("indoor")) {
    const auto& in = j["indoor"];
    check_keys(in, "indoor", {"grid_side", "room_side_m", "ues_per_cell", "wrap_around"});
    if (in.contains("grid_side")) c.indoor.grid_side = positive_int(in["grid_side"], "indoor.grid_side");
    if (in.contains("room_side_m")) c.indoor.room_side = positive(in["room_side_m"], "indoor.room_side_m");
    if (in.contains("ues_per_cell")) c.indoor.ues_per_cell = positive_int(in["ues_per_cell"], "indoor.ues_per_cell");
    if (in.contains("wrap_around")) c.indoor.wrap_around = boolean(in["wrap_around"], "indoor.wrap_around");
  }
  if (j.contains("outdoor")) {
    const auto& out = j["outdoor"];
    check_keys(out, "outdoor", {"n_cells", "ues_per_cell", "hex_apothem_m", "cell_radius_m", "min_bs_distance_m"});
    if (out.contains("n_cells")) c.outdoor.n_cells = positive_int(out["n_cells"], "outdoor.n_cells");
    if (out.contains("ues_per_cell"))
      c.outdoor.ues_per_cell = positive_int(out["ues_per_cell"], "outdoor.ues_per_cell");
    if (out.contains("hex_apothem_m")) c.outdoor.hex_apothem = positive(out["hex_apothem_m"], "outdoor.hex_apothem_m");
    if (out.contains("cell_radius_m")) c.outdoor.cell_radius = positive(out["cell_radius_m"], "outdoor.cell_radius_m");
    if (out.contains("min_bs_distance_m")) {
      c.outdoor.min_bs_distance = number(out["min_bs_distance_m"], "outdoor.min_bs_distance_m");
      if (c.outdoor.min_bs_distance < 0.0) schema_error("outdoor.min_bs_distance_m: must be >= 0");
    }
  }
  if (j.contains("power")) {
    const auto& p = j["power"];
    check_keys(p, "power",
               {"floor_fraction", "epsilon", "max_outer", "gp_tol", "gp_max_iter", "safeguard", "trim_saturated"});
    if (p.contains("floor_fraction")) {
      c.power.floor_fraction = positive(p["floor_fraction"], "power.floor_fraction");
      if (c.power.floor_fraction >= 1.0) throw CliError(exit_code::kRange, "power.floor_fraction: must be < 1");
    }
    if (p.contains("epsilon")) c.power.epsilon = positive(p["epsilon"], "power.epsilon");
    if (p.contains("max_outer")) c.power.max_outer = positive_int(p["max_outer"], "power.max_outer");
    if (p.contains("gp_tol")) c.power.inner.tol = positive(p["gp_tol"], "power.gp_tol");
    if (p.contains("gp_max_iter")) c.power.inner.max_iter = positive_int(p["gp_max_iter"], "power.gp_max_iter");
    if (p.contains("safeguard")) c.power.safeguard = boolean(p["safeguard"], "power.safeguard");
    if (p.contains("trim_saturated")) c.power.trim_saturated = boolean(p["trim_saturated"], "power.trim_saturated");
  }
  spec.validate();
  return spec;
}

ExperimentSpec parse_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw CliError(exit_code::kMissingFile, "cannot open config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_preset(ExperimentSpec& spec, const std::string& name) {
  const std::vector<double> levels{75.0, 85.0, 95.0, 105.0, kInf};
  spec.sweep_cancellation = levels;
  if (name == "table2" || name == "table4") {
    spec.base.scenario = Scenario::Indoor;
    spec.variants = {Variant::FD};
  } else if (name == "table5") {
    spec.base.scenario = Scenario::Indoor;
    spec.variants = {Variant::FD, Variant::FD_EnergyAware};
  } else if (name == "table7") {
    spec.base.scenario = Scenario::Outdoor;
    spec.variants = {Variant::FD};
  } else if (name == "table9") {
    spec.base.scenario = Scenario::Outdoor;
    spec.variants = {Variant::FD, Variant::FD_EnergyAware};
  } else {
    throw CliError(exit_code::kUsage, "unknown preset: " + name);
  }
}

namespace {

struct Job {
  RunConfig cfg;
  std::vector<DropResult> results;
};

std::string job_label(const RunConfig& c) {
  return to_string(c.variant) + (is_full_duplex(c.variant) ? "@" + format_cancellation(c.cancellation_db) : "");
}

// Runs the requested (variant, cancellation) pairs plus one run of each needed baseline.
RunOutput execute(const ExperimentSpec& spec, const std::vector<std::pair<Variant, double>>& requested,
                  const std::string& command, std::ostream& log,
                  TraceList* traces) {
  spec.validate();
  std::vector<Variant> baselines;
  for (const auto& [v, _] : requested) {
    const Variant b = baseline_of(v);
    if (std::find(baselines.begin(), baselines.end(), b) == baselines.end()) baselines.push_back(b);
  }
  std::map<Variant, Job> base_runs;
  for (Variant b : baselines) {
    Job job{spec.base, {}};
    job.cfg.variant = b;
    job.cfg.cancellation_db = kInf;
    log << "running " << job_label(job.cfg) << " (" << job.cfg.drops << " drops x " << job.cfg.slots << " slots)\n";
    job.results = run_drops(job.cfg);
    base_runs.emplace(b, std::move(job));
  }

  RunOutput out;
  std::vector<Variant> emitted;
  const auto emit = [&](const RunConfig& cfg, const std::vector<DropResult>& results) {
    const Variant b = baseline_of(cfg.variant);
    out.metrics.push_back(aggregate(cfg, results, base_runs.at(b).results));
    if (traces)
      for (const auto& r : results)
        traces->emplace_back(job_label(cfg) + "_drop" + std::to_string(r.drop), r.trace);
  };
  for (Variant b : baselines) emit(base_runs.at(b).cfg, base_runs.at(b).results);
  for (const auto& [v, canc] : requested) {
    if (!is_full_duplex(v)) continue;  // baselines were emitted above
    RunConfig cfg = spec.base;
    cfg.variant = v;
    cfg.cancellation_db = canc;
    log << "running " << job_label(cfg) << '\n';
    emit(cfg, run_drops(cfg));
  }

  json& m = out.manifest;
  m["schema_version"] = 1;
  m["command"] = command;
  m["config"] = to_json(spec.base);
  m["variants"] = json::array();
  for (Variant v : spec.variants) m["variants"].push_back(to_string(v));
  m["sweep_cancellation"] = json::array();
  for (double c : spec.sweep_cancellation) m["sweep_cancellation"].push_back(format_cancellation(c));
  m["drop_seeds"] = json::array();
  for (int d = 0; d < spec.base.drops; ++d) m["drop_seeds"].push_back(drop_seed(spec.base.seed, d));
  m["input_hash"] = blob_hash(m["config"].dump());
  m["outputs"] = {{"metrics", "metrics.csv"},
                  {"metrics_columns", "scenario,variant,cancellation_db,direction,mean_tput_bps,gain_pct,edge5_bps,"
                                      "ee_bits_per_joule,frac_fd,frac_hd,frac_idle"},
                  {"cdf_columns", "rank,dl_bps,ul_bps"}};
  return out;
}

}  // namespace

RunOutput cmd_run(const ExperimentSpec& spec, std::ostream& log, TraceList* traces) {
  return execute(spec, {{spec.base.variant, spec.base.cancellation_db}}, "run", log, traces);
}

RunOutput cmd_sweep(const ExperimentSpec& spec, std::ostream& log, TraceList* traces) {
  std::vector<std::pair<Variant, double>> req;
  for (Variant v : spec.variants) {
    if (!is_full_duplex(v)) {
      req.emplace_back(v, kInf);
      continue;
    }
    for (double c : spec.sweep_cancellation) req.emplace_back(v, c);
  }
  return execute(spec, req, "sweep", log, traces);
}

std::vector<GainRow> cmd_compare(const std::vector<Metrics>& fd, const std::vector<Metrics>& hd) {
  const auto find = [&](Scenario s, Variant v, double c) -> const Metrics* {
    for (const auto& m : hd)
      if (m.scenario == s && m.variant == v && (m.cancellation_db == c || !is_full_duplex(v))) return &m;
    return nullptr;
  };
  const auto gain = [](double x, double base) { return base > 0.0 ? (x / base - 1.0) * 100.0 : 0.0; };
  std::vector<GainRow> rows;
  for (const auto& m : fd) {
    const Metrics* base = find(m.scenario, m.variant, m.cancellation_db);
    if (!base) base = find(m.scenario, baseline_of(m.variant), kInf);
    if (!base) continue;
    rows.push_back({m.scenario, m.variant, m.cancellation_db, gain(m.dl.mean_tput_bps, base->dl.mean_tput_bps),
                    gain(m.ul.mean_tput_bps, base->ul.mean_tput_bps)});
  }
  return rows;
}

namespace {

void print_table(std::ostream& os, const std::vector<Metrics>& metrics, const std::string& title,
                 const std::vector<std::pair<std::string, double (*)(const Metrics&)>>& rows) {
  std::vector<Variant> variants;
  for (const auto& m : metrics)
    if (std::find(variants.begin(), variants.end(), m.variant) == variants.end()) variants.push_back(m.variant);
  for (Variant v : variants) {
    std::vector<const Metrics*> cols;
    for (const auto& m : metrics)
      if (m.variant == v) cols.push_back(&m);
    os << title << " [" << to_string(v) << "]\n" << std::left << std::setw(12) << "";
    for (const auto* m : cols)
      os << std::right << std::setw(12) << (is_full_duplex(v) ? "@" + format_cancellation(m->cancellation_db) : "-");
    os << '\n';
    for (const auto& [label, f] : rows) {
      os << std::left << std::setw(12) << label << std::right << std::fixed;
      for (const auto* m : cols) os << std::setw(12) << std::setprecision(3) << f(*m);
      os << std::defaultfloat << '\n';
    }
  }
}

}  // namespace

void print_gain_table(std::ostream& os, const std::vector<Metrics>& metrics) {
  std::vector<Metrics> fd;
  for (const auto& m : metrics)
    if (is_full_duplex(m.variant)) fd.push_back(m);
  print_table(os, fd, "throughput gain %",
              {{"downlink", [](const Metrics& m) { return m.dl.gain_pct; }},
               {"uplink", [](const Metrics& m) { return m.ul.gain_pct; }}});
}

void print_mode_table(std::ostream& os, const std::vector<Metrics>& metrics) {
  print_table(os, metrics, "cell-slot mode share",
              {{"FD", [](const Metrics& m) { return m.frac_fd; }},
               {"HD", [](const Metrics& m) { return m.frac_hd; }},
               {"idle", [](const Metrics& m) { return m.frac_idle; }}});
}

void print_energy_table(std::ostream& os, const std::vector<Metrics>& metrics) {
  print_table(os, metrics, "energy efficiency Gbit/J",
              {{"downlink", [](const Metrics& m) { return m.dl.ee_bits_per_joule / 1e9; }},
               {"uplink", [](const Metrics& m) { return m.ul.ee_bits_per_joule / 1e9; }}});
}

namespace {

std::vector<Metrics> read_metrics_dir(const std::filesystem::path& dir) {
  const auto path = dir / "metrics.csv";
  std::ifstream in(path);
  if (!in) throw CliError(exit_code::kMissingFile, "cannot open " + path.string());
  try {
    return read_metrics_csv(in);
  } catch (const std::exception& e) {
    throw CliError(exit_code::kSchema, path.string() + ": " + e.what());
  }
}

struct Overrides {
  std::string config;
  std::string preset;
  std::string scenario;
  std::string variant;
  std::string cancellation;
  std::optional<int> slots, drops, jobs;
  std::optional<std::uint64_t> seed;
  std::optional<double> kappa;
  std::string out;
  bool trace = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("config", o.config, "JSON config file");
  cmd->add_option("--preset", o.preset, "table2|table4|table5|table7|table9");
  cmd->add_option("--scenario", o.scenario, "indoor|outdoor");
  cmd->add_option("--variant", o.variant, "HD|FD|RR_HD|RR_FD|FD_FDUE|FD_EnergyAware");
  cmd->add_option("--cancellation", o.cancellation, "self-interference cancellation in dB, or inf");
  cmd->add_option("--slots", o.slots, "timeslots per drop");
  cmd->add_option("--drops", o.drops, "random drops");
  cmd->add_option("--seed", o.seed, "base seed (falls back to FDCELL_SEED)");
  cmd->add_option("--kappa", o.kappa, "energy-aware penalty scale");
  cmd->add_option("--jobs", o.jobs, "parallel drops (0: all cores)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--trace", o.trace, "write per-slot decision traces");
}

ExperimentSpec resolve(const Overrides& o) {
  ExperimentSpec spec = o.config.empty() ? ExperimentSpec{} : parse_config(o.config);
  if (!o.preset.empty()) apply_preset(spec, o.preset);
  try {
    if (!o.scenario.empty()) spec.base.scenario = scenario_from_string(o.scenario);
    if (!o.variant.empty()) {
      spec.base.variant = variant_from_string(o.variant);
      spec.variants = {spec.base.variant};
    }
    if (!o.cancellation.empty()) {
      char* end = nullptr;
      const double v = std::strtod(o.cancellation.c_str(), &end);
      if (*end == '\0' && v < 0.0) throw CliError(exit_code::kRange, "cancellation must be >= 0 dB");
      spec.base.cancellation_db = parse_cancellation(o.cancellation);
      spec.sweep_cancellation = {spec.base.cancellation_db};
    }
  } catch (const ConfigError& e) {
    throw CliError(exit_code::kUsage, e.what());
  }
  if (o.slots) spec.base.slots = *o.slots;
  if (o.drops) spec.base.drops = *o.drops;
  if (o.jobs) spec.base.jobs = *o.jobs;
  if (o.kappa) spec.base.kappa = *o.kappa;
  if (o.seed) {
    spec.base.seed = *o.seed;
  } else if (!spec.seed_explicit) {
    if (const char* env = std::getenv("FDCELL_SEED")) {
      try {
        size_t used = 0;
        spec.base.seed = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw CliError(exit_code::kUsage, std::string("FDCELL_SEED is not an unsigned integer: ") + env);
      }
    }
  }
  if (!o.out.empty()) spec.output_dir = o.out;
  if (o.trace) spec.base.trace = true;
  spec.validate();
  return spec;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Full-duplex small-cell scheduling simulator"};
  app.require_subcommand(1);
  Overrides run_o, sweep_o, drop_o;
  auto* run = app.add_subcommand("run", "run one variant and its half-duplex baseline");
  add_common(run, run_o);
  auto* sweep = app.add_subcommand("sweep", "run variants across cancellation levels");
  add_common(sweep, sweep_o);
  std::string fd_dir, hd_dir;
  auto* compare = app.add_subcommand("compare", "recompute gains from two result directories");
  compare->add_option("fd_dir", fd_dir, "directory with metrics.csv")->required();
  compare->add_option("hd_dir", hd_dir, "baseline directory with metrics.csv")->required();
  int drop_index = 0;
  auto* drop = app.add_subcommand("drop", "write the topology and channel gains of one drop");
  add_common(drop, drop_o);
  drop->add_option("--index", drop_index, "drop index");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? exit_code::kOk : exit_code::kUsage;
  }

  try {
    if (*run || *sweep) {
      const bool is_run = static_cast<bool>(*run);
      const ExperimentSpec spec = resolve(is_run ? run_o : sweep_o);
      TraceList traces;
      TraceList* sink = spec.base.trace ? &traces : nullptr;
      RunOutput result;
      try {
        result = is_run ? cmd_run(spec, err, sink) : cmd_sweep(spec, err, sink);
      } catch (const CliError&) {
        throw;
      } catch (const std::exception& e) {
        throw CliError(exit_code::kRuntime, std::string("drop failed: ") + e.what());
      }
      persist(spec.output_dir, result, traces);
      print_gain_table(out, result.metrics);
      print_mode_table(out, result.metrics);
      print_energy_table(out, result.metrics);
      out << "results written to " << spec.output_dir.string() << '\n';
    } else if (*compare) {
      const auto rows = cmd_compare(read_metrics_dir(fd_dir), read_metrics_dir(hd_dir));
      out << "scenario,variant,cancellation_db,dl_gain_pct,ul_gain_pct\n" << std::setprecision(6);
      for (const auto& r : rows)
        out << to_string(r.scenario) << ',' << to_string(r.variant) << ',' << format_cancellation(r.cancellation_db)
            << ',' << r.dl_gain_pct << ',' << r.ul_gain_pct << '\n';
    } else if (*drop) {
      const ExperimentSpec spec = resolve(drop_o);
      const DropSetup s = make_drop(spec.base, drop_seed(spec.base.seed, drop_index));
      std::filesystem::create_directories(spec.output_dir);
      std::ofstream(spec.output_dir / "topology.json") << to_json(s.topology).dump(2) << '\n';
      std::ofstream gains(spec.output_dir / "gains.csv");
      s.gains.write_csv(gains);
      out << "drop " << drop_index << " written to " << spec.output_dir.string() << '\n';
    }
  } catch (const CliError& e) {
    err << "error: " << e.what() << '\n';
    return e.code();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kRange;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kRuntime;
  }
  return exit_code::kOk;
}

}  // namespace fdcell
