#include "fdcell/sinr_rate.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fdcell {

SlotDecision SlotDecision::idle(int num_cells) {
  SlotDecision d;
  d.dl_ue.assign(num_cells, kNoUe);
  d.ul_ue.assign(num_cells, kNoUe);
  d.p_dl.assign(num_cells, 0.0);
  d.p_ul.assign(num_cells, 0.0);
  return d;
}

void SlotDecision::set(int b, Direction d, int ue, double power) {
  if (d == Direction::Downlink) {
    dl_ue[b] = ue;
    p_dl[b] = ue == kNoUe ? 0.0 : power;
  } else {
    ul_ue[b] = ue;
    p_ul[b] = ue == kNoUe ? 0.0 : power;
  }
}

int SlotDecision::active_links() const {
  int n = 0;
  for (size_t b = 0; b < dl_ue.size(); ++b) n += (dl_ue[b] != kNoUe) + (ul_ue[b] != kNoUe);
  return n;
}

void validate(const SlotDecision& dec, double p_dl_max, double p_ul_max, bool allow_same_ue) {
  const auto fail = [](int b, const char* what) {
    throw std::logic_error("slot decision, cell " + std::to_string(b) + ": " + what);
  };
  for (int b = 0; b < dec.num_cells(); ++b) {
    if (!allow_same_ue && dec.dl_ue[b] != kNoUe && dec.dl_ue[b] == dec.ul_ue[b])
      fail(b, "same UE scheduled in both directions");
    if (dec.p_dl[b] < 0.0 || dec.p_dl[b] > p_dl_max * (1 + 1e-12)) fail(b, "downlink power out of range");
    if (dec.p_ul[b] < 0.0 || dec.p_ul[b] > p_ul_max * (1 + 1e-12)) fail(b, "uplink power out of range");
    if ((dec.dl_ue[b] == kNoUe) != (dec.p_dl[b] == 0.0)) fail(b, "downlink power/UE mismatch");
    if ((dec.ul_ue[b] == kNoUe) != (dec.p_ul[b] == 0.0)) fail(b, "uplink power/UE mismatch");
  }
}

double downlink_sinr(int b, const SlotDecision& dec, const ChannelGains& g) {
  const int ue = g.ue_index(b, dec.dl_ue[b]);
  double interference = g.noise_ue(ue);
  for (int i = 0; i < dec.num_cells(); ++i) {
    if (i != b && dec.dl_ue[i] != kNoUe) interference += dec.p_dl[i] * g.bs_ue(i, ue);
    if (dec.ul_ue[i] == kNoUe) continue;
    if (i == b && dec.ul_ue[i] == dec.dl_ue[b]) {
      interference += dec.p_ul[i] * g.gamma_ue();
    } else {
      interference += dec.p_ul[i] * g.ue_ue(g.ue_index(i, dec.ul_ue[i]), ue);
    }
  }
  return dec.p_dl[b] * g.bs_ue(b, ue) / interference;
}

double uplink_sinr(int b, const SlotDecision& dec, const ChannelGains& g) {
  const int ue = g.ue_index(b, dec.ul_ue[b]);
  double interference = g.noise_bs(b) + dec.p_dl[b] * g.gamma();
  for (int i = 0; i < dec.num_cells(); ++i) {
    if (i == b) continue;
    if (dec.dl_ue[i] != kNoUe) interference += dec.p_dl[i] * g.bs_bs(i, b);
    if (dec.ul_ue[i] != kNoUe) interference += dec.p_ul[i] * g.bs_ue(b, g.ue_index(i, dec.ul_ue[i]));
  }
  return dec.p_ul[b] * g.bs_ue(b, ue) / interference;
}

double capped_se(double sinr, const RateParams& params) {
  return std::min(std::log2(1.0 + sinr), params.max_se);
}

double rate_from_sinr(double sinr, const RateParams& params) {
  double se = capped_se(sinr, params);
  if (se < params.min_se) {
    if (params.below_min == BelowMinSe::Outage) return 0.0;
    se = params.min_se;
  }
  return params.bandwidth_hz * se;
}

LinkRates evaluate_rates(const SlotDecision& dec, const ChannelGains& g, const RateParams& params) {
  LinkRates r;
  r.dl.assign(dec.num_cells(), 0.0);
  r.ul.assign(dec.num_cells(), 0.0);
  for (int b = 0; b < dec.num_cells(); ++b) {
    if (dec.dl_ue[b] != kNoUe && dec.p_dl[b] > 0.0)
      r.dl[b] = rate_from_sinr(downlink_sinr(b, dec, g), params);
    if (dec.ul_ue[b] != kNoUe && dec.p_ul[b] > 0.0)
      r.ul[b] = rate_from_sinr(uplink_sinr(b, dec, g), params);
  }
  return r;
}

}  // namespace fdcell
