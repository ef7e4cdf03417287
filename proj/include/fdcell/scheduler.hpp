#pragma once

#include <vector>

#include "fdcell/sinr_rate.hpp"

namespace fdcell {

/// Exponentially-weighted average rates per UE and direction (bits/s).
struct PFState {
  std::vector<double> avg_dl;
  std::vector<double> avg_ul;
  double beta = 0.99;

  /// Every average starts at `initial_rate`, which must be positive.
  static PFState initial(int num_ues, double initial_rate, double beta);

  double avg(int ue, Direction d) const { return d == Direction::Downlink ? avg_dl[ue] : avg_ul[ue]; }
};

/// Scheduled links: avg <- beta*avg + (1-beta)*rate. Everything else decays by beta.
PFState update_state(const PFState& st, const SlotDecision& dec, const LinkRates& rates,
                     const ChannelGains& g);

/// log10(beta*avg + (1-beta)*rate) - log10(beta*avg).
double marginal_utility(double avg, double inst_rate, double beta);

/// Marginal utility of the link (b, d) of `dec` under the interference of `dec`.
/// Zero when the cell has no UE in that direction.
double link_utility(int b, Direction d, const SlotDecision& dec, const ChannelGains& g,
                    const PFState& st, const RateParams& rp);

/// Sum of link utilities over all active links.
double slot_utility(const SlotDecision& dec, const ChannelGains& g, const PFState& st,
                    const RateParams& rp);

struct SelectionContext {
  const ChannelGains& gains;
  const PFState& state;
  RateParams rates;
  double p_dl_max = 0.0;
  double p_ul_max = 0.0;
  bool allow_same_ue = false;  // full-duplex UEs
};

/// Utility gain of adding one link to cell c of `current`: the candidate's own
/// marginal utility minus the utility lost by every link already assigned.
/// `d`/`u` follow the selection procedure's convention: the uplink branch runs
/// when cell c has no uplink yet and u != kNoUe, otherwise the downlink branch
/// runs when c has no downlink and d != kNoUe. Throws std::logic_error when
/// neither branch applies or the candidate breaks the half-duplex UE rule.
double get_utility(const SelectionContext& ctx, int c, int d, int u, const SlotDecision& current);

struct Selection {
  SlotDecision decision;
  std::vector<double> gain_dl;  // utility gain recorded when each link was accepted
  std::vector<double> gain_ul;
};

/// Hybrid full-duplex greedy selection at maximum powers. Pass 1 gives each
/// cell (in a random order) its best single link; pass 2 tries to add the
/// opposite direction.
Selection select_ues(const SelectionContext& ctx, Rng& rng);

/// Half-duplex baseline: pass 1 only, restricted to one synchronized direction.
Selection hd_select_ues(const SelectionContext& ctx, Direction direction, Rng& rng);

/// Round-robin with fixed maximum powers. In full-duplex mode the round-robin
/// pick for the slot's direction is paired with a random distinct UE in the
/// opposite direction.
class RoundRobinScheduler {
 public:
  explicit RoundRobinScheduler(std::vector<int> ues_per_cell);

  SlotDecision select(Direction slot_direction, bool full_duplex, double p_dl_max, double p_ul_max,
                      Rng& rng);

 private:
  std::vector<int> ues_per_cell_;
  std::vector<int> cursor_dl_;
  std::vector<int> cursor_ul_;
};

}  // namespace fdcell
