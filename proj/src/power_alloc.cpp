#include "fdcell/power_alloc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fdcell {

double pf_weight(double avg, double beta) {
  return (1.0 - beta) / (beta * avg * std::numbers::ln10);
}

LinkValues pf_weights(const PFState& st, const SlotDecision& selection, const ChannelGains& g) {
  LinkValues w = LinkValues::zeros(selection.num_cells());
  for (int b = 0; b < selection.num_cells(); ++b) {
    if (selection.dl_ue[b] != kNoUe) w.dl[b] = pf_weight(st.avg_dl[g.ue_index(b, selection.dl_ue[b])], st.beta);
    if (selection.ul_ue[b] != kNoUe) w.ul[b] = pf_weight(st.avg_ul[g.ue_index(b, selection.ul_ue[b])], st.beta);
  }
  return w;
}

LinkValues energy_penalty_weights(const NetworkTopology& topo, const SlotDecision& selection,
                                  double kappa) {
  if (kappa < 0.0 || !std::isfinite(kappa)) throw ConfigError("energy penalty kappa must be >= 0");
  LinkValues c = LinkValues::zeros(selection.num_cells());
  for (int b = 0; b < selection.num_cells(); ++b) {
    for (Direction d : {Direction::Downlink, Direction::Uplink}) {
      if (!selection.has(b, d)) continue;
      const double m = std::max(1.0, distance(topo.bs(b), topo.ue(b, selection.ue(b, d)), topo).meters);
      c.at({b, d}) = kappa / m;
    }
  }
  return c;
}

double SpObjective::log_value(std::span<const double> x) const {
  double v = 0.0;
  for (size_t l = 0; l < numerators.size(); ++l)
    v += exponents[l] * (std::log(numerators[l].evaluate(x)) - std::log(denominators[l].evaluate(x)));
  for (size_t l = 0; l < penalties.size(); ++l)
    if (penalties[l] != 0.0) v += penalties[l] * std::log(x[l]);
  return v;
}

double SpObjective::product_form(std::span<const double> x, double bandwidth_hz) const {
  double v = 0.0;
  const double to_weight = std::numbers::ln2 / (scale * bandwidth_hz);
  for (size_t l = 0; l < numerators.size(); ++l)
    v += exponents[l] * to_weight * (std::log(numerators[l].evaluate(x)) - std::log(denominators[l].evaluate(x)));
  return std::exp(v);
}

std::vector<double> SpObjective::powers_of(const SlotDecision& dec) const {
  std::vector<double> x(vars.size());
  for (size_t i = 0; i < vars.size(); ++i) x[i] = dec.power(vars[i].cell, vars[i].dir);
  return x;
}

void SpObjective::apply(std::span<const double> x, SlotDecision& dec) const {
  for (size_t i = 0; i < vars.size(); ++i) {
    const auto& l = vars[i];
    dec.set(l.cell, l.dir, dec.ue(l.cell, l.dir), x[i]);
  }
}

SpObjective build_sp_objective(const PowerProblem& prob) {
  using gp::Monomial;
  const auto& sel = prob.selection;
  const auto& g = *prob.gains;
  const int B = sel.num_cells();
  if (sel.empty()) throw std::invalid_argument("power problem has no selected links");

  SpObjective obj;
  std::vector<int> var_dl(B, -1), var_ul(B, -1);
  for (int b = 0; b < B; ++b) {
    if (sel.dl_ue[b] != kNoUe) {
      var_dl[b] = obj.num_vars();
      obj.vars.push_back({b, Direction::Downlink});
      obj.upper.push_back(prob.config.p_dl_max);
    }
    if (sel.ul_ue[b] != kNoUe) {
      var_ul[b] = obj.num_vars();
      obj.vars.push_back({b, Direction::Uplink});
      obj.upper.push_back(prob.config.p_ul_max);
    }
  }
  const auto term = [](double coeff, int var) {
    return coeff > 0.0 ? std::optional<Monomial>(Monomial(coeff, {{var, 1.0}})) : std::nullopt;
  };

  for (const auto& link : obj.vars) {
    const int b = link.cell;
    gp::Posynomial num;
    std::optional<Monomial> signal;
    if (link.dir == Direction::Downlink) {
      const int ue = g.ue_index(b, sel.dl_ue[b]);
      num.add(Monomial(g.noise_ue(ue)));
      for (int i = 0; i < B; ++i) {
        if (i != b && var_dl[i] >= 0)
          if (auto m = term(g.bs_ue(i, ue), var_dl[i])) num.add(*m);
        if (var_ul[i] < 0) continue;
        const bool own = i == b && sel.ul_ue[i] == sel.dl_ue[b];
        const double coeff = own ? g.gamma_ue() : g.ue_ue(g.ue_index(i, sel.ul_ue[i]), ue);
        if (auto m = term(coeff, var_ul[i])) num.add(*m);
      }
      signal = term(g.bs_ue(b, ue), var_dl[b]);
    } else {
      const int ue = g.ue_index(b, sel.ul_ue[b]);
      num.add(Monomial(g.noise_bs(b)));
      if (var_dl[b] >= 0)
        if (auto m = term(g.gamma(), var_dl[b])) num.add(*m);
      for (int i = 0; i < B; ++i) {
        if (i == b) continue;
        if (var_dl[i] >= 0)
          if (auto m = term(g.bs_bs(i, b), var_dl[i])) num.add(*m);
        if (var_ul[i] >= 0)
          if (auto m = term(g.bs_ue(b, g.ue_index(i, sel.ul_ue[i])), var_ul[i])) num.add(*m);
      }
      signal = term(g.bs_ue(b, ue), var_ul[b]);
    }
    gp::Posynomial den = num;
    if (signal) den.add(*signal);
    obj.numerators.push_back(std::move(num));
    obj.denominators.push_back(std::move(den));
    obj.exponents.push_back(prob.weights.at(link) * prob.rates.bandwidth_hz / std::numbers::ln2);
    obj.penalties.push_back(prob.penalty ? prob.penalty->at(link) : 0.0);
  }

  const double emax = *std::max_element(obj.exponents.begin(), obj.exponents.end());
  if (!(emax > 0.0)) throw std::invalid_argument("power problem weights must be positive");
  obj.scale = 1.0 / emax;
  for (auto& e : obj.exponents) e *= obj.scale;
  for (auto& c : obj.penalties) c *= obj.scale;
  return obj;
}

namespace {

double default_epsilon(const PowerConfig& cfg, int num_cells) {
  if (cfg.epsilon > 0.0) return cfg.epsilon;
  return 1e-3 * std::sqrt(2.0 * num_cells) * std::max(cfg.p_dl_max, cfg.p_ul_max);
}

gp::Problem condensed_gp(const SpObjective& obj, std::span<const double> x, std::span<const double> lower) {
  gp::Problem p;
  p.num_vars = obj.num_vars();
  p.lower.assign(lower.begin(), lower.end());
  p.upper = obj.upper;
  gp::Monomial rest(1.0);
  for (size_t l = 0; l < obj.numerators.size(); ++l) {
    p.objective.push_back({obj.exponents[l], obj.numerators[l]});
    rest = rest * gp::condense(obj.denominators[l], x).pow(-obj.exponents[l]);
  }
  gp::Monomial::Exponents pen;
  for (int l = 0; l < obj.num_vars(); ++l)
    if (obj.penalties[l] != 0.0) pen.emplace_back(l, obj.penalties[l]);
  rest = rest * gp::Monomial(1.0, std::move(pen));
  // A coefficient-only monomial factor is a constant; it is kept for exact objective values.
  p.objective.push_back({1.0, gp::Posynomial({rest})});
  return p;
}

}  // namespace

SpResult solve_power_sp(const PowerProblem& prob, const SlotDecision& start) {
  const SpObjective obj = build_sp_objective(prob);
  const int n = obj.num_vars();
  std::vector<double> lower(n);
  for (int i = 0; i < n; ++i) lower[i] = prob.config.floor_fraction * obj.upper[i];

  std::vector<double> x = obj.powers_of(start);
  for (int i = 0; i < n; ++i) x[i] = std::clamp(x[i], lower[i], obj.upper[i]);
  const double eps = default_epsilon(prob.config, prob.selection.num_cells());

  SpResult res;
  res.decision = prob.selection;
  res.objective_trace.push_back(obj.log_value(x));
  for (int s = 1; s <= prob.config.max_outer; ++s) {
    const gp::Problem step = condensed_gp(obj, x, lower);
    const gp::Result r = gp::solve(step, prob.config.inner, x);
    res.outer_iterations = s;
    res.inner_status = r.status;
    if (!r.converged()) break;
    double moved = 0.0;
    for (int i = 0; i < n; ++i) moved += (r.x[i] - x[i]) * (r.x[i] - x[i]);
    x = r.x;
    res.objective_trace.push_back(obj.log_value(x));
    if (std::sqrt(moved) < eps) {
      res.converged = true;
      break;
    }
  }
  obj.apply(x, res.decision);
  return res;
}

int trim_saturated(SlotDecision& dec, const ChannelGains& g, const RateParams& rates) {
  const double target = (std::exp2(rates.max_se) - 1.0) * (1.0 + 1e-9);
  int trimmed = 0;
  std::vector<bool> touched(2 * dec.num_cells(), false);
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool changed = false;
    for (int b = 0; b < dec.num_cells(); ++b) {
      for (Direction d : {Direction::Downlink, Direction::Uplink}) {
        if (!dec.has(b, d) || dec.power(b, d) <= 0.0) continue;
        const double sinr = d == Direction::Downlink ? downlink_sinr(b, dec, g) : uplink_sinr(b, dec, g);
        if (sinr <= target * (1.0 + 1e-6)) continue;
        dec.set(b, d, dec.ue(b, d), dec.power(b, d) * target / sinr);
        touched[2 * b + (d == Direction::Uplink)] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }
  for (bool t : touched) trimmed += t;
  return trimmed;
}

namespace {

double penalized_utility(const SlotDecision& dec, const ChannelGains& g, const PFState& st,
                         const RateParams& rates, const LinkValues* penalty) {
  double u = slot_utility(dec, g, st, rates);
  if (penalty)
    for (int b = 0; b < dec.num_cells(); ++b)
      for (Direction d : {Direction::Downlink, Direction::Uplink})
        if (dec.has(b, d)) u -= penalty->at({b, d}) * std::log(dec.power(b, d));
  return u;
}

}  // namespace

Allocation allocate_with_fallback(const PFState& st, const Selection& selection, const ChannelGains& g,
                                  const RateParams& rates, const PowerConfig& cfg,
                                  const LinkValues* penalty) {
  Allocation out;
  SlotDecision current = selection.decision;
  for (int b = 0; b < current.num_cells(); ++b) {
    if (current.has(b, Direction::Downlink)) current.p_dl[b] = cfg.p_dl_max;
    if (current.has(b, Direction::Uplink)) current.p_ul[b] = cfg.p_ul_max;
  }
  const SlotDecision initial = current;
  const auto gain_of = [&](const LinkRef& l) {
    return l.dir == Direction::Downlink ? selection.gain_dl[l.cell] : selection.gain_ul[l.cell];
  };

  while (!current.empty()) {
    ++out.attempts;
    PowerProblem prob;
    prob.selection = current;
    prob.weights = pf_weights(st, current, g);
    prob.gains = &g;
    prob.rates = rates;
    prob.config = cfg;
    if (penalty) prob.penalty = *penalty;
    const SpResult sp = solve_power_sp(prob, current);
    out.outer_iterations += sp.outer_iterations;

    if (sp.converged) {
      SlotDecision dec = sp.decision;
      if (cfg.safeguard &&
          penalized_utility(dec, g, st, rates, penalty) < penalized_utility(initial, g, st, rates, penalty)) {
        dec = initial;
        out.kept_initial = true;
      }
      for (int b = 0; b < dec.num_cells(); ++b) {
        for (Direction d : {Direction::Downlink, Direction::Uplink}) {
          if (!dec.has(b, d)) continue;
          const double cap = d == Direction::Downlink ? cfg.p_dl_max : cfg.p_ul_max;
          if (dec.power(b, d) <= cfg.floor_fraction * cap * (1.0 + 1e-6)) {
            dec.clear(b, d);
            ++out.floored;
          }
        }
      }
      if (cfg.trim_saturated) out.trimmed = trim_saturated(dec, g, rates);
      out.decision = std::move(dec);
      out.converged = true;
      return out;
    }

    // Drop the weakest link by the gain it brought during selection.
    std::optional<LinkRef> weakest;
    for (int b = 0; b < current.num_cells(); ++b)
      for (Direction d : {Direction::Downlink, Direction::Uplink})
        if (current.has(b, d) && (!weakest || gain_of({b, d}) < gain_of(*weakest))) weakest = LinkRef{b, d};
    current.clear(weakest->cell, weakest->dir);
    out.pruned.push_back(*weakest);
  }
  out.decision = SlotDecision::idle(selection.decision.num_cells());
  return out;
}

}  // namespace fdcell
