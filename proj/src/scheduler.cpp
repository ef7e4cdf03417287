#include "fdcell/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fdcell {

PFState PFState::initial(int num_ues, double initial_rate, double beta) {
  if (!(initial_rate > 0.0)) throw ConfigError("initial average rate must be positive");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
  PFState st;
  st.avg_dl.assign(num_ues, initial_rate);
  st.avg_ul.assign(num_ues, initial_rate);
  st.beta = beta;
  return st;
}

PFState update_state(const PFState& st, const SlotDecision& dec, const LinkRates& rates,
                     const ChannelGains& g) {
  PFState next = st;
  for (auto& a : next.avg_dl) a *= st.beta;
  for (auto& a : next.avg_ul) a *= st.beta;
  for (int b = 0; b < dec.num_cells(); ++b) {
    if (dec.dl_ue[b] != kNoUe) next.avg_dl[g.ue_index(b, dec.dl_ue[b])] += (1.0 - st.beta) * rates.dl[b];
    if (dec.ul_ue[b] != kNoUe) next.avg_ul[g.ue_index(b, dec.ul_ue[b])] += (1.0 - st.beta) * rates.ul[b];
  }
  return next;
}

double marginal_utility(double avg, double inst_rate, double beta) {
  if (inst_rate <= 0.0) return 0.0;
  return std::log10(1.0 + (1.0 - beta) * inst_rate / (beta * avg));
}

double link_utility(int b, Direction d, const SlotDecision& dec, const ChannelGains& g,
                    const PFState& st, const RateParams& rp) {
  if (!dec.has(b, d) || dec.power(b, d) <= 0.0) return 0.0;
  const double sinr = d == Direction::Downlink ? downlink_sinr(b, dec, g) : uplink_sinr(b, dec, g);
  const int ue = g.ue_index(b, dec.ue(b, d));
  return marginal_utility(st.avg(ue, d), rate_from_sinr(sinr, rp), st.beta);
}

double slot_utility(const SlotDecision& dec, const ChannelGains& g, const PFState& st,
                    const RateParams& rp) {
  double total = 0.0;
  for (int b = 0; b < dec.num_cells(); ++b)
    total += link_utility(b, Direction::Downlink, dec, g, st, rp) +
             link_utility(b, Direction::Uplink, dec, g, st, rp);
  return total;
}

namespace {

struct LinkUtility {
  int cell;
  Direction dir;
  double utility;
};

// Utilities of every link already in `current`, computed once per cell visit.
std::vector<LinkUtility> assigned_utilities(const SelectionContext& ctx, const SlotDecision& current) {
  std::vector<LinkUtility> out;
  for (int b = 0; b < current.num_cells(); ++b)
    for (Direction d : {Direction::Downlink, Direction::Uplink})
      if (current.has(b, d))
        out.push_back({b, d, link_utility(b, d, current, ctx.gains, ctx.state, ctx.rates)});
  return out;
}

double delta_utility(const SelectionContext& ctx, int c, Direction dir, int ue,
                     SlotDecision& scratch, const std::vector<LinkUtility>& before) {
  const double p = dir == Direction::Downlink ? ctx.p_dl_max : ctx.p_ul_max;
  scratch.set(c, dir, ue, p);
  const double gain = link_utility(c, dir, scratch, ctx.gains, ctx.state, ctx.rates);
  // Loss terms run over every previously assigned link; the candidate's own
  // slot was empty, so excluding cell c from the same-direction sum changes nothing.
  double loss = 0.0;
  for (const auto& l : before)
    loss += std::abs(link_utility(l.cell, l.dir, scratch, ctx.gains, ctx.state, ctx.rates) - l.utility);
  scratch.clear(c, dir);
  return gain - loss;
}

struct Best {
  int ue = kNoUe;
  double gain = 0.0;
};

Best best_candidate(const SelectionContext& ctx, int c, Direction dir, int excluded,
                    SlotDecision& scratch, const std::vector<LinkUtility>& before) {
  Best best;
  const int n = ctx.gains.ues_in_cell(c);
  for (int k = 0; k < n; ++k) {
    if (k == excluded) continue;
    const double du = delta_utility(ctx, c, dir, k, scratch, before);
    if (best.ue == kNoUe || du > best.gain) best = {k, du};
  }
  return best;
}

std::vector<int> random_order(int n, Rng& rng) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

Selection empty_selection(int B) {
  return {SlotDecision::idle(B), std::vector<double>(B, 0.0), std::vector<double>(B, 0.0)};
}

void accept(Selection& s, const SelectionContext& ctx, int c, Direction dir, const Best& best) {
  s.decision.set(c, dir, best.ue, dir == Direction::Downlink ? ctx.p_dl_max : ctx.p_ul_max);
  (dir == Direction::Downlink ? s.gain_dl : s.gain_ul)[c] = best.gain;
}

}  // namespace

double get_utility(const SelectionContext& ctx, int c, int d, int u, const SlotDecision& current) {
  Direction dir;
  int ue;
  if (current.ul_ue[c] == kNoUe && u != kNoUe) {
    dir = Direction::Uplink;
    ue = u;
  } else if (current.dl_ue[c] == kNoUe && d != kNoUe) {
    dir = Direction::Downlink;
    ue = d;
  } else {
    throw std::logic_error("get_utility: candidate does not fill an empty slot of its cell");
  }
  if (ue < 0 || ue >= ctx.gains.ues_in_cell(c)) throw std::logic_error("get_utility: UE index out of range");
  const int other = current.ue(c, dir == Direction::Downlink ? Direction::Uplink : Direction::Downlink);
  if (!ctx.allow_same_ue && other == ue)
    throw std::logic_error("get_utility: UE already scheduled in the opposite direction");
  SlotDecision scratch = current;
  return delta_utility(ctx, c, dir, ue, scratch, assigned_utilities(ctx, current));
}

Selection select_ues(const SelectionContext& ctx, Rng& rng) {
  const int B = ctx.gains.num_cells();
  Selection s = empty_selection(B);
  const std::vector<int> order = random_order(B, rng);
  SlotDecision scratch = s.decision;

  for (int c : order) {
    const auto before = assigned_utilities(ctx, s.decision);
    scratch = s.decision;
    const Best dl = best_candidate(ctx, c, Direction::Downlink, kNoUe, scratch, before);
    const Best ul = best_candidate(ctx, c, Direction::Uplink, kNoUe, scratch, before);
    if (std::max(dl.gain, ul.gain) > 0.0 && dl.ue != kNoUe) {
      if (dl.gain >= ul.gain)
        accept(s, ctx, c, Direction::Downlink, dl);
      else
        accept(s, ctx, c, Direction::Uplink, ul);
    }
  }

  for (int c : order) {
    Direction missing;
    if (s.decision.dl_ue[c] != kNoUe && s.decision.ul_ue[c] == kNoUe)
      missing = Direction::Uplink;
    else if (s.decision.ul_ue[c] != kNoUe && s.decision.dl_ue[c] == kNoUe)
      missing = Direction::Downlink;
    else
      continue;
    const int paired = s.decision.ue(c, missing == Direction::Uplink ? Direction::Downlink : Direction::Uplink);
    const auto before = assigned_utilities(ctx, s.decision);
    scratch = s.decision;
    const Best best = best_candidate(ctx, c, missing, ctx.allow_same_ue ? kNoUe : paired, scratch, before);
    if (best.ue != kNoUe && best.gain > 0.0) accept(s, ctx, c, missing, best);
  }
  return s;
}

Selection hd_select_ues(const SelectionContext& ctx, Direction direction, Rng& rng) {
  const int B = ctx.gains.num_cells();
  Selection s = empty_selection(B);
  SlotDecision scratch = s.decision;
  for (int c : random_order(B, rng)) {
    const auto before = assigned_utilities(ctx, s.decision);
    scratch = s.decision;
    const Best best = best_candidate(ctx, c, direction, kNoUe, scratch, before);
    if (best.ue != kNoUe && best.gain > 0.0) accept(s, ctx, c, direction, best);
  }
  return s;
}

RoundRobinScheduler::RoundRobinScheduler(std::vector<int> ues_per_cell)
    : ues_per_cell_(std::move(ues_per_cell)),
      cursor_dl_(ues_per_cell_.size(), 0),
      cursor_ul_(ues_per_cell_.size(), 0) {}

SlotDecision RoundRobinScheduler::select(Direction slot_direction, bool full_duplex, double p_dl_max,
                                         double p_ul_max, Rng& rng) {
  const int B = static_cast<int>(ues_per_cell_.size());
  SlotDecision dec = SlotDecision::idle(B);
  const bool dl_slot = slot_direction == Direction::Downlink;
  auto& cursor = dl_slot ? cursor_dl_ : cursor_ul_;
  for (int b = 0; b < B; ++b) {
    const int n = ues_per_cell_[b];
    const int pick = cursor[b];
    cursor[b] = (cursor[b] + 1) % n;
    dec.set(b, slot_direction, pick, dl_slot ? p_dl_max : p_ul_max);
    if (full_duplex && n > 1) {
      std::uniform_int_distribution<int> other(0, n - 2);
      int partner = other(rng);
      if (partner >= pick) ++partner;
      const Direction opp = dl_slot ? Direction::Uplink : Direction::Downlink;
      dec.set(b, opp, partner, dl_slot ? p_ul_max : p_dl_max);
    }
  }
  return dec;
}

}  // namespace fdcell
