#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "fdcell/topology.hpp"

namespace fdcell {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class Scenario { Indoor, Outdoor };
enum class OutdoorLink { BsBs, BsUe, UeUe };

// Propagation formulas. Distances are in kilometers, losses in dB.
double los_probability_indoor(double r_km);
double los_probability_outdoor(double r_km);
double pathloss_indoor_intra(double r_km, bool los);
double pathloss_indoor_inter(double r_km);
double pathloss_outdoor(OutdoorLink kind, double r_km, bool los);

double db_to_linear(double db);
double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// Receiver noise power in watts for a thermal density (dBm/Hz), bandwidth and noise figure.
double thermal_noise_watts(double bandwidth_hz, double noise_figure_db,
                           double density_dbm_hz = -174.0);

/// Linear residual self-interference factor; +inf dB cancellation gives 0.
double gamma_from_cancellation(double cancellation_db);

struct ChannelParams {
  Scenario scenario = Scenario::Indoor;
  double bandwidth_hz = 10e6;
  double noise_density_dbm_hz = -174.0;
  double nf_bs_db = 8.0;
  double nf_ue_db = 9.0;
  double shadow_los_db = 3.0;
  double shadow_nlos_db = 4.0;
  double shadow_bs_bs_db = 6.0;   // outdoor pico-to-pico
  double shadow_ue_ue_db = 4.0;   // outdoor UE-to-UE
  double wall_loss_db = 20.0;
  bool wall_loss_per_wall = true;  // false: apply once for any crossing
  bool shadowing = true;
  double min_distance_m = 1.0;     // path-loss formulas are clamped below this

  static ChannelParams indoor();
  static ChannelParams outdoor();
};

/// Linear power gains between every pair of nodes of one drop, plus receiver
/// noise and the self-interference factors. UEs use the flat index of
/// NetworkTopology::ue_index.
class ChannelGains {
 public:
  ChannelGains() = default;
  ChannelGains(int num_cells, std::vector<int> ue_offsets, std::vector<int> ue_cell);

  int num_cells() const { return num_cells_; }
  int num_ues() const { return num_ues_; }
  int ue_index(int b, int k) const { return ue_offsets_[b] + k; }
  int ues_in_cell(int b) const;
  int serving_cell(int u) const { return ue_cell_[u]; }
  const std::vector<int>& ue_offsets() const { return ue_offsets_; }

  double bs_ue(int b, int u) const { return bs_ue_[b * num_ues_ + u]; }
  double ue_ue(int u, int v) const { return ue_ue_[u * num_ues_ + v]; }
  double bs_bs(int b, int c) const { return bs_bs_[b * num_cells_ + c]; }
  double noise_ue(int u) const { return noise_ue_[u]; }
  double noise_bs(int b) const { return noise_bs_[b]; }
  double gamma() const { return gamma_; }
  double gamma_ue() const { return gamma_ue_; }

  void set_bs_ue(int b, int u, double g) { bs_ue_[b * num_ues_ + u] = g; }
  void set_ue_ue(int u, int v, double g);
  void set_bs_bs(int b, int c, double g);
  void set_noise_ue(int u, double w) { noise_ue_[u] = w; }
  void set_noise_bs(int b, double w) { noise_bs_[b] = w; }
  void set_gamma(double g) { gamma_ = g; }
  void set_gamma_ue(double g) { gamma_ue_ = g; }

  /// Node-by-node matrix dump. Node ids: BSs 0..B-1, then UEs B..B+U-1.
  /// Row = source, column = destination, diagonal 0.
  void write_csv(std::ostream& os) const;

 private:
  int num_cells_ = 0;
  int num_ues_ = 0;
  std::vector<int> ue_offsets_;
  std::vector<int> ue_cell_;
  std::vector<double> bs_ue_;
  std::vector<double> ue_ue_;
  std::vector<double> bs_bs_;
  std::vector<double> noise_ue_;
  std::vector<double> noise_bs_;
  double gamma_ = 0.0;
  double gamma_ue_ = 0.0;
};

/// Draws LOS states and shadowing once per unordered node pair and assembles
/// all gain matrices. gamma is left at 0; callers set the cancellation level.
ChannelGains build_gains(const NetworkTopology& topo, const ChannelParams& params, Rng& rng);

}  // namespace fdcell
