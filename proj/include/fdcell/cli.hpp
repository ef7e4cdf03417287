#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdcell/sim.hpp"

namespace fdcell {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kMissingFile = 3;
inline constexpr int kSchema = 4;
inline constexpr int kRange = 5;
inline constexpr int kRuntime = 10;
}  // namespace exit_code

/// Error carrying the process exit code it maps to.
class CliError : public std::runtime_error {
 public:
  CliError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

struct ExperimentSpec {
  RunConfig base;
  std::vector<double> sweep_cancellation{75.0, 85.0, 95.0, 105.0, kInf};
  std::vector<Variant> variants{Variant::FD};
  std::filesystem::path output_dir = "out";
  bool seed_explicit = false;  // seed given in the config file

  /// Throws CliError(kRange) on an empty sweep or variant list and on RunConfig range errors.
  void validate() const;
};

/// JSON config. An empty file yields the indoor defaults. Keys:
///   scenario, variant, variants, cancellation_db, sweep_cancellation, slots, drops,
///   seed, bandwidth_hz, beta, p_bs_max_w, p_ue_max_w, kappa, slot_duration_s,
///   below_min_se ("outage" | "floor"), output_dir, jobs, trace,
///   indoor {grid_side, room_side_m, ues_per_cell, wrap_around},
///   outdoor {n_cells, ues_per_cell, hex_apothem_m, cell_radius_m, min_bs_distance_m},
///   power {floor_fraction, epsilon, max_outer, gp_tol, gp_max_iter, safeguard, trim_saturated}.
/// Cancellation values are numbers or the string "inf".
ExperimentSpec parse_config(const std::filesystem::path& file);
ExperimentSpec parse_config_text(const std::string& text);

/// Applies a reproduction preset: table2, table4, table5, table7 or table9.
void apply_preset(ExperimentSpec& spec, const std::string& name);

/// Per-drop decision traces keyed by "<variant>@<cancellation>_drop<d>".
using TraceList = std::vector<std::pair<std::string, std::vector<TraceRow>>>;

/// Runs base.variant at base.cancellation_db together with its baseline.
RunOutput cmd_run(const ExperimentSpec& spec, std::ostream& log, TraceList* traces = nullptr);

/// Runs every variant at every sweep level plus the baselines.
RunOutput cmd_sweep(const ExperimentSpec& spec, std::ostream& log, TraceList* traces = nullptr);

struct GainRow {
  Scenario scenario;
  Variant variant;
  double cancellation_db;
  double dl_gain_pct;
  double ul_gain_pct;
};

/// Gains of every row of `fd` against the same row of `hd` when present,
/// otherwise against the baseline variant's row.
std::vector<GainRow> cmd_compare(const std::vector<Metrics>& fd, const std::vector<Metrics>& hd);

/// Rows: direction; columns: sweep levels. Only full-duplex variants are listed.
void print_gain_table(std::ostream& os, const std::vector<Metrics>& metrics);
void print_mode_table(std::ostream& os, const std::vector<Metrics>& metrics);
void print_energy_table(std::ostream& os, const std::vector<Metrics>& metrics);

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fdcell
