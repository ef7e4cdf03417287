#pragma once

#include <optional>
#include <vector>

#include "fdcell/gp_core.hpp"
#include "fdcell/scheduler.hpp"

namespace fdcell {

struct LinkRef {
  int cell = 0;
  Direction dir = Direction::Downlink;
  bool operator==(const LinkRef&) const = default;
};

/// Per-cell values for the downlink and uplink link of a slot; 0 where absent.
struct LinkValues {
  std::vector<double> dl;
  std::vector<double> ul;

  static LinkValues zeros(int num_cells) { return {std::vector<double>(num_cells, 0.0), std::vector<double>(num_cells, 0.0)}; }
  double at(const LinkRef& l) const { return l.dir == Direction::Downlink ? dl[l.cell] : ul[l.cell]; }
  double& at(const LinkRef& l) { return l.dir == Direction::Downlink ? dl[l.cell] : ul[l.cell]; }
};

/// (1 - beta) / (beta * avg * ln 10): first-order weight of a link's rate in the PF utility.
double pf_weight(double avg, double beta);
LinkValues pf_weights(const PFState& st, const SlotDecision& selection, const ChannelGains& g);

/// Penalty weights c = kappa / (UE-to-BS distance in meters) for every selected link.
/// kappa = 0 disables the penalty; negative kappa is a configuration error.
LinkValues energy_penalty_weights(const NetworkTopology& topo, const SlotDecision& selection,
                                  double kappa);

struct PowerConfig {
  double p_dl_max = 0.251188643150958;  // 24 dBm
  double p_ul_max = 0.199526231496888;  // 23 dBm
  double floor_fraction = 1e-6;         // variable floor as a fraction of the cap
  double epsilon = 0.0;                 // <= 0: 1e-3 * sqrt(2B) * max cap
  int max_outer = 30;
  gp::Options inner;
  bool safeguard = true;       // never return a point worse than the max-power start
  bool trim_saturated = true;  // scale down links above the spectral-efficiency cap
};

struct PowerProblem {
  SlotDecision selection;  // UE choice; powers are ignored
  LinkValues weights;
  const ChannelGains* gains = nullptr;
  RateParams rates;
  PowerConfig config;
  std::optional<LinkValues> penalty;  // energy-aware variant
};

/// Minimization form of the weighted sum rate over the selected links:
///   sum_l e_l * ln(num_l / den_l) + sum_l c_l * ln p_l,
/// num_l = noise + interference, den_l = num_l + signal, e_l = w_l * W / ln 2.
/// Exponents and penalties share one positive scale factor for conditioning.
struct SpObjective {
  std::vector<LinkRef> vars;  // variable id -> link
  std::vector<double> upper;  // per-variable cap
  std::vector<gp::Posynomial> numerators;
  std::vector<gp::Posynomial> denominators;
  std::vector<double> exponents;
  std::vector<double> penalties;
  double scale = 1.0;

  int num_vars() const { return static_cast<int>(vars.size()); }
  /// Scaled objective at power vector x (variable order).
  double log_value(std::span<const double> x) const;
  /// prod_l (1 + SINR_l)^(-w_l) without penalty or scaling.
  double product_form(std::span<const double> x, double bandwidth_hz) const;
  std::vector<double> powers_of(const SlotDecision& dec) const;
  void apply(std::span<const double> x, SlotDecision& dec) const;
};

SpObjective build_sp_objective(const PowerProblem& prob);

struct SpResult {
  SlotDecision decision;
  bool converged = false;
  int outer_iterations = 0;
  gp::Status inner_status = gp::Status::Converged;
  std::vector<double> objective_trace;  // scaled objective at the start and after each outer step
};

/// Successive condensation: each step replaces every denominator by its
/// monomial approximation at the current point and solves the resulting GP.
/// Stops when the power step norm drops below epsilon.
SpResult solve_power_sp(const PowerProblem& prob, const SlotDecision& start);

struct Allocation {
  SlotDecision decision;
  bool converged = false;  // false only when every link was pruned
  int attempts = 0;
  int outer_iterations = 0;
  std::vector<LinkRef> pruned;  // in pruning order
  bool kept_initial = false;    // safeguard preferred the max-power start
  int floored = 0;              // links dropped for sitting at the power floor
  int trimmed = 0;              // links scaled down to the spectral-efficiency cap
};

/// Solves the power problem starting at maximum powers. When the solver does
/// not converge the link with the smallest selection gain is removed and the
/// problem is solved again, until it converges or nothing is left.
Allocation allocate_with_fallback(const PFState& st, const Selection& selection, const ChannelGains& g,
                                  const RateParams& rates, const PowerConfig& cfg,
                                  const LinkValues* penalty = nullptr);

/// Lowers powers of links whose SINR exceeds the cap until none does. Rates are unchanged or higher.
int trim_saturated(SlotDecision& dec, const ChannelGains& g, const RateParams& rates);

}  // namespace fdcell
