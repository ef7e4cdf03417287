#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdcell/power_alloc.hpp"

namespace fdcell {

enum class Variant { HD, FD, RR_HD, RR_FD, FD_FDUE, FD_EnergyAware };

std::string to_string(Variant v);
std::string to_string(Scenario s);
Variant variant_from_string(const std::string& s);
Scenario scenario_from_string(const std::string& s);

/// HD for the greedy variants, RR_HD for round-robin.
Variant baseline_of(Variant v);
bool is_full_duplex(Variant v);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct RunConfig {
  Scenario scenario = Scenario::Indoor;
  Variant variant = Variant::FD;
  double cancellation_db = kInf;
  int slots = 1000;
  int drops = 5;
  double bandwidth_hz = 10e6;
  double beta = 0.99;
  double p_dl_max_dbm = 24.0;
  double p_ul_max_dbm = 23.0;
  std::uint64_t seed = 1;
  IndoorConfig indoor;
  OutdoorConfig outdoor;
  double kappa = 0.1;             // energy-aware penalty scale
  double slot_duration_s = 1e-3;
  BelowMinSe below_min = BelowMinSe::Outage;
  PowerConfig power;              // caps are taken from the dBm fields
  bool trace = false;
  int jobs = 0;                   // 0: hardware concurrency

  /// Throws ConfigError for out-of-range values.
  void validate() const;
  ChannelParams channel() const;
  RateParams rates() const;
  PowerConfig power_config() const;
  int num_cells() const;
  int ues_per_cell() const;
};

nlohmann::json to_json(const RunConfig& cfg);

/// One cell in one slot.
struct TraceRow {
  int slot = 0;
  int cell = 0;
  char mode = '-';  // F full duplex, D downlink only, U uplink only, - idle
  int dl_ue = kNoUe;
  int ul_ue = kNoUe;
  double p_dl = 0.0;
  double p_ul = 0.0;
  double rate_dl = 0.0;
  double rate_ul = 0.0;
  int attempts = 0;
  int outer_iterations = 0;
  bool converged = true;
};

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows);

struct DropResult {
  int drop = 0;
  std::uint64_t drop_seed = 0;
  int slots = 0;
  double slot_duration_s = 1e-3;
  std::vector<int> ue_cell;
  std::vector<double> bits_dl, bits_ul;      // per flat UE index
  std::vector<double> joules_dl, joules_ul;  // transmit energy spent serving each UE
  long long cells_fd = 0;
  long long cells_hd = 0;
  long long cells_idle = 0;
  long long hd_ue_violations = 0;  // cells with the same UE in both directions
  long long pruned_links = 0;
  double max_rate = 0.0;
  std::vector<TraceRow> trace;     // filled when RunConfig::trace is set

  double avg_rate_dl(int ue) const { return bits_dl[ue] / (slots * slot_duration_s); }
  double avg_rate_ul(int ue) const { return bits_ul[ue] / (slots * slot_duration_s); }
};

/// Seed of drop `drop` of a run with base seed `seed`.
std::uint64_t drop_seed(std::uint64_t seed, int drop);

/// Topology and gains of a drop without gamma (shared by every variant and cancellation level).
struct DropSetup {
  NetworkTopology topology;
  ChannelGains gains;
};
DropSetup make_drop(const RunConfig& cfg, std::uint64_t seed_of_drop);

DropResult run_drop(const RunConfig& cfg, int drop);

/// Slot loop of one drop on a given deployment. gamma is set from cfg.
DropResult simulate(const RunConfig& cfg, DropSetup setup, std::uint64_t seed_of_drop);

/// Runs drops 0..cfg.drops-1 in parallel, results in drop order.
std::vector<DropResult> run_drops(const RunConfig& cfg);

struct DirectionMetrics {
  double mean_tput_bps = 0.0;
  double median_tput_bps = 0.0;
  double gain_pct = 0.0;         // ratio of means against the baseline
  double median_gain_pct = 0.0;  // ratio of medians
  double edge5_bps = 0.0;
  double ee_bits_per_joule = 0.0;
};

struct Metrics {
  Scenario scenario = Scenario::Indoor;
  Variant variant = Variant::FD;
  double cancellation_db = kInf;
  DirectionMetrics dl, ul;
  double frac_fd = 0.0, frac_hd = 0.0, frac_idle = 0.0;
  std::vector<double> per_ue_dl, per_ue_ul;  // pooled over drops, drop-major
};

/// Linear interpolation between order statistics; q in [0, 1].
double percentile(std::vector<double> v, double q);

/// Gains are left at 0 when `baseline` is empty.
Metrics aggregate(const RunConfig& cfg, const std::vector<DropResult>& results,
                  const std::vector<DropResult>& baseline = {});

/// Per-UE average rates of the run pooled over drops.
std::vector<double> pooled_rates(const std::vector<DropResult>& results, Direction d);

std::string format_cancellation(double db);
double parse_cancellation(const std::string& s);

void write_metrics_csv(std::ostream& os, const std::vector<Metrics>& rows);
/// Reads the scalar columns back; per-UE vectors stay empty.
std::vector<Metrics> read_metrics_csv(std::istream& is);
void write_cdf_csv(std::ostream& os, const Metrics& m);

/// Git blob hash (SHA-1 over "blob <size>\0" + content) as lowercase hex.
std::string blob_hash(const std::string& content);

struct RunOutput {
  std::vector<Metrics> metrics;
  nlohmann::json manifest;
};

/// Writes metrics.csv, cdf_<variant>.csv per metrics row, manifest.json and,
/// when traces were recorded, trace_<variant>_<cancellation>.csv.
void persist(const std::filesystem::path& dir, const RunOutput& out,
             const std::vector<std::pair<std::string, std::vector<TraceRow>>>& traces = {});

}  // namespace fdcell
