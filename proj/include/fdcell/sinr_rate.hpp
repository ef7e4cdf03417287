#pragma once

#include <vector>

#include "fdcell/channel.hpp"

namespace fdcell {

inline constexpr int kNoUe = -1;

enum class Direction { Downlink, Uplink };

/// Per-cell link choice for one timeslot. UE entries are indices local to the
/// cell (0..N^b-1) or kNoUe; powers are watts and zero for absent links.
struct SlotDecision {
  std::vector<int> dl_ue;
  std::vector<int> ul_ue;
  std::vector<double> p_dl;
  std::vector<double> p_ul;

  static SlotDecision idle(int num_cells);

  int num_cells() const { return static_cast<int>(dl_ue.size()); }
  bool has(int b, Direction d) const {
    return (d == Direction::Downlink ? dl_ue[b] : ul_ue[b]) != kNoUe;
  }
  int ue(int b, Direction d) const { return d == Direction::Downlink ? dl_ue[b] : ul_ue[b]; }
  double power(int b, Direction d) const { return d == Direction::Downlink ? p_dl[b] : p_ul[b]; }
  void set(int b, Direction d, int ue, double power);
  void clear(int b, Direction d) { set(b, d, kNoUe, 0.0); }
  int active_links() const;
  bool empty() const { return active_links() == 0; }

  bool operator==(const SlotDecision&) const = default;
};

/// Checks the SlotDecision invariants; throws std::logic_error on violation.
void validate(const SlotDecision& dec, double p_dl_max, double p_ul_max, bool allow_same_ue);

enum class BelowMinSe {
  Outage,  // rate 0
  Floor,   // clamp up to the minimum spectral efficiency
};

struct RateParams {
  double bandwidth_hz = 10e6;
  double min_se = 0.26;
  double max_se = 6.0;
  BelowMinSe below_min = BelowMinSe::Outage;
};

/// Interference terms include only links present in `dec`. When the downlink
/// UE of cell b also transmits uplink (full-duplex UE), its own uplink enters
/// as p_ul[b]·gamma_ue instead of a UE-to-UE gain.
double downlink_sinr(int b, const SlotDecision& dec, const ChannelGains& g);
double uplink_sinr(int b, const SlotDecision& dec, const ChannelGains& g);

double rate_from_sinr(double sinr, const RateParams& params);

/// Spectral efficiency before the outage/floor rule: log2(1+sinr) capped at max_se.
double capped_se(double sinr, const RateParams& params);

struct LinkRates {
  std::vector<double> dl;  // bits/s per cell, 0 if no link
  std::vector<double> ul;
};

LinkRates evaluate_rates(const SlotDecision& dec, const ChannelGains& g, const RateParams& params);

}  // namespace fdcell
