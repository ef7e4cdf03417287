// Acceptance gates. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fdcell/gp_core.hpp"
#include "fdcell/power_alloc.hpp"
#include "fdcell/sim.hpp"
#include "fixtures.hpp"

using namespace fdcell;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::abs(b); }

// ---------------------------------------------------------------------------

Outcome channel_exactness() {
  Outcome o;
  const auto t0 = Clock::now();
  struct Case {
    const char* name;
    double got, want;
  };
  const Case cases[] = {
      {"indoor LOS 10 m", los_probability_indoor(0.010), 1.0},
      {"indoor LOS 50 m", los_probability_indoor(0.050), 0.5},
      {"indoor LOS 25 m", los_probability_indoor(0.025), 0.771622946715410948},
      {"outdoor LOS 1e-7 km", los_probability_outdoor(1e-7), 1.0},
      {"outdoor LOS 50 m", los_probability_outdoor(0.05), 0.779214157901535665},
      {"indoor intra LOS 20 m", pathloss_indoor_intra(0.02, true), 60.7874069267212822},
      {"indoor intra NLOS 100 m", pathloss_indoor_intra(0.1, false), 104.1},
      {"indoor intra LOS 1 km", pathloss_indoor_intra(1.0, true), 89.5},
      {"indoor inter 100 m", pathloss_indoor_inter(0.1), 104.1},
      {"indoor inter 1 km", pathloss_indoor_inter(1.0), 147.4},
      {"outdoor BS-UE LOS 100 m", pathloss_outdoor(OutdoorLink::BsUe, 0.1, true), 82.9},
      {"outdoor UE-UE 40 m", pathloss_outdoor(OutdoorLink::UeUe, 0.04, false), 70.4911998265592478},
      {"outdoor BS-BS NLOS 1 km", pathloss_outdoor(OutdoorLink::BsBs, 1.0, false), 169.36},
      {"20 m LOS gain", db_to_linear(-pathloss_indoor_intra(0.02, true)), 8.34179105270491965e-07},
  };
  double worst = 0.0;
  for (const auto& c : cases) {
    const double err = std::abs(c.got - c.want) / std::abs(c.want);
    worst = std::max(worst, err);
    o.require(err <= 1e-9, c.name);
  }
  o.require(los_probability_outdoor(10.0) < 1e-12, "outdoor LOS 10 km");
  const double t = seconds_since(t0);
  o.require(t < 1.0, "runtime");
  o.detail << std::size(cases) << " values, worst relative error " << worst << ", " << t << " s";
  return o;
}

// ---------------------------------------------------------------------------

gp::Posynomial random_posynomial(std::mt19937_64& rng, int vars) {
  std::uniform_int_distribution<int> nterms(1, 6);
  std::uniform_real_distribution<double> logc(-3.0, 3.0), ex(-2.0, 2.0);
  gp::Posynomial p;
  const int n = nterms(rng);
  for (int j = 0; j < n; ++j) {
    gp::Monomial::Exponents e;
    for (int v = 0; v < vars; ++v) e.emplace_back(v, ex(rng));
    p.add(gp::Monomial(std::pow(10.0, logc(rng)), e));
  }
  return p;
}

std::vector<double> random_point(std::mt19937_64& rng, int vars) {
  std::uniform_real_distribution<double> logx(-2.0, 2.0);
  std::vector<double> x(vars);
  for (auto& v : x) v = std::pow(10.0, logx(rng));
  return x;
}

Outcome gp_core() {
  using namespace gp;
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1002);
  int violations = 0, tangency = 0;
  for (int i = 0; i < 100; ++i) {
    const int vars = 1 + i % 4;
    const Posynomial p = random_posynomial(rng, vars);
    const auto x0 = random_point(rng, vars);
    const Monomial m = condense(p, x0);
    if (!rel(m.evaluate(x0), p.evaluate(x0), 1e-12)) ++tangency;
    for (int k = 0; k < 100; ++k) {
      const auto x = random_point(rng, vars);
      if (m.evaluate(x) > p.evaluate(x) * (1.0 + 1e-12)) ++violations;
    }
  }
  o.require(violations == 0, "under-estimation");
  o.require(tangency == 0, "tangency");

  const auto a = solve(Problem::minimize(1, Posynomial({Monomial(1.0, {{0, 1.0}}), Monomial(1.0, {{0, -1.0}})}), 0.1, 10.0));
  o.require(a.converged() && rel(a.objective, 2.0, 1e-4) && rel(a.x[0], 1.0, 1e-4), "x + 1/x");

  Problem pb = Problem::minimize(2, Posynomial({Monomial(1.0, {{0, -1.0}, {1, -1.0}})}), 1e-3, 2.0);
  pb.inequalities.push_back(Posynomial({Monomial(0.5, {{0, 1.0}}), Monomial(0.5, {{1, 1.0}})}));
  const auto b = solve(pb);
  o.require(b.converged() && rel(b.objective, 1.0, 1e-4) && rel(b.x[0], 1.0, 1e-4) && rel(b.x[1], 1.0, 1e-4),
            "1/(xy) under x/2 + y/2 <= 1");

  const double cap = 0.251188643150958;
  const auto c = solve(Problem::minimize(1, Posynomial({Monomial(1.0, {{0, -1.0}})}), 1e-6 * cap, cap));
  o.require(c.converged() && rel(c.x[0], cap, 1e-4) && rel(c.objective, 1.0 / cap, 1e-4), "1/x up to its cap");

  const double t = seconds_since(t0);
  o.require(t < 10.0, "runtime");
  o.detail << "10000 condensation checks, " << violations << " violations; optima " << a.objective << ", "
           << b.objective << ", " << c.x[0] << "; " << t << " s";
  return o;
}

// ---------------------------------------------------------------------------

Outcome sp_monotonicity() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> cells(2, 4);
  std::uniform_real_distribution<double> w(1e-10, 1e-8), unit(0.0, 1.0);
  const double levels[] = {75.0, 85.0, 95.0, 105.0};
  int increases = 0, unterminated = 0, max_outer = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int B = cells(rng);
    auto g = testing::random_gains(B, 2, rng, 1e-11, 1e-7, 1e-14, 1e-9);
    g.set_gamma(gamma_from_cancellation(levels[trial % 4]));
    auto sel = SlotDecision::idle(B);
    LinkValues wt = LinkValues::zeros(B);
    for (int b = 0; b < B; ++b) {
      const double r = unit(rng);
      if (r < 0.8) sel.set(b, Direction::Downlink, 0, 0.251188643150958);
      if (r > 0.2) sel.set(b, Direction::Uplink, 1, 0.199526231496888);
      wt.dl[b] = w(rng);
      wt.ul[b] = w(rng);
    }
    if (sel.empty()) sel.set(0, Direction::Downlink, 0, 0.251188643150958);
    PowerProblem prob;
    prob.selection = sel;
    prob.weights = wt;
    prob.gains = &g;
    const auto res = solve_power_sp(prob, sel);
    for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
      if (res.objective_trace[i] > res.objective_trace[i - 1] + 1e-9 * std::abs(res.objective_trace[i - 1]))
        ++increases;
    if (!res.converged) ++unterminated;
    max_outer = std::max(max_outer, res.outer_iterations);
  }
  o.require(increases == 0, "objective increased");
  o.require(unterminated == 0, "step rule not met");
  const double t = seconds_since(t0);
  o.require(t < 60.0, "runtime");
  o.detail << "50 problems, " << increases << " increases, " << unterminated << " unterminated, max "
           << max_outer << " outer steps, " << t << " s";
  return o;
}

// ---------------------------------------------------------------------------

// Every decision of a single cell with `n` UEs at maximum power.
std::vector<SlotDecision> all_single_cell_decisions(int n, double pdl, double pul) {
  std::vector<SlotDecision> out{SlotDecision::idle(1)};
  for (int d = -1; d < n; ++d) {
    for (int u = -1; u < n; ++u) {
      if (d < 0 && u < 0) continue;
      if (d >= 0 && d == u) continue;
      auto dec = SlotDecision::idle(1);
      if (d >= 0) dec.set(0, Direction::Downlink, d, pdl);
      if (u >= 0) dec.set(0, Direction::Uplink, u, pul);
      out.push_back(dec);
    }
  }
  return out;
}

PFState random_state(int ues, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> f(-1.0, 1.0);
  PFState st = PFState::initial(ues, 2.6e6, 0.99);
  for (auto& a : st.avg_dl) a *= std::pow(10.0, f(rng));
  for (auto& a : st.avg_ul) a *= std::pow(10.0, f(rng));
  return st;
}

Outcome selection_oracle() {
  Outcome o;
  RunConfig cfg;
  cfg.indoor.grid_side = 1;
  const RateParams rp = cfg.rates();
  const double pdl = dbm_to_watts(cfg.p_dl_max_dbm), pul = dbm_to_watts(cfg.p_ul_max_dbm);
  const double levels[] = {75.0, 85.0, 95.0, 105.0, kInf};
  std::mt19937_64 rng(404);
  int matches = 0, trivial = 0;
  double worst_gap = 0.0;
  for (int i = 0; i < 100; ++i) {
    cfg.indoor.ues_per_cell = 1 + i % 2;
    auto setup = make_drop(cfg, 1000 + i);
    setup.gains.set_gamma(gamma_from_cancellation(levels[i % 5]));
    const auto st = random_state(setup.gains.num_ues(), rng);
    SelectionContext ctx{setup.gains, st, rp, pdl, pul, false};
    Rng r(i);
    const auto sel = select_ues(ctx, r);
    const double greedy = slot_utility(sel.decision, setup.gains, st, rp);
    double best = 0.0;
    for (const auto& dec : all_single_cell_decisions(cfg.indoor.ues_per_cell, pdl, pul))
      best = std::max(best, slot_utility(dec, setup.gains, st, rp));
    if (best == 0.0) ++trivial;
    const double gap = best - greedy;
    worst_gap = std::max(worst_gap, gap / std::max(best, 1e-300));
    if (gap <= 1e-12 * std::max(1.0, best)) ++matches;
  }
  o.require(matches == 100, "greedy below exhaustive");
  o.detail << matches << "/100 draws match the exhaustive optimum (" << trivial
           << " with nothing worth scheduling), worst relative gap " << worst_gap;
  return o;
}

// ---------------------------------------------------------------------------

// Largest slot utility over every UE choice and an 8-level log power grid.
double grid_optimum(const ChannelGains& g, const PFState& st, const RateParams& rp, double pdl, double pul) {
  const int B = g.num_cells();
  std::vector<double> lv_dl, lv_ul;
  for (int k = 0; k < 8; ++k) {
    const double f = std::pow(10.0, -3.0 * (7 - k) / 7.0);
    lv_dl.push_back(pdl * f);
    lv_ul.push_back(pul * f);
  }
  const auto choices = all_single_cell_decisions(2, pdl, pul);
  double best = 0.0;
  std::vector<int> pick(B, 0);
  std::function<void(int, SlotDecision&)> per_cell;
  std::function<void(int, SlotDecision&)> per_power;
  std::vector<LinkRef> links;

  per_power = [&](int i, SlotDecision& dec) {
    if (i == static_cast<int>(links.size())) {
      best = std::max(best, slot_utility(dec, g, st, rp));
      return;
    }
    const auto& l = links[i];
    const auto& lv = l.dir == Direction::Downlink ? lv_dl : lv_ul;
    for (double p : lv) {
      dec.set(l.cell, l.dir, dec.ue(l.cell, l.dir), p);
      per_power(i + 1, dec);
    }
  };
  per_cell = [&](int b, SlotDecision& dec) {
    if (b == B) {
      links.clear();
      for (int c = 0; c < B; ++c)
        for (Direction d : {Direction::Downlink, Direction::Uplink})
          if (dec.has(c, d)) links.push_back({c, d});
      per_power(0, dec);
      return;
    }
    for (const auto& ch : choices) {
      dec.set(b, Direction::Downlink, ch.dl_ue[0], ch.p_dl[0]);
      dec.set(b, Direction::Uplink, ch.ul_ue[0], ch.p_ul[0]);
      per_cell(b + 1, dec);
    }
  };
  auto dec = SlotDecision::idle(B);
  per_cell(0, dec);
  return best;
}

Outcome joint_near_optimality() {
  Outcome o;
  const auto t0 = Clock::now();
  RunConfig cfg;
  cfg.cancellation_db = 95.0;
  const RateParams rp = cfg.rates();
  const PowerConfig pc = cfg.power_config();
  const double pdl = pc.p_dl_max, pul = pc.p_ul_max;
  std::mt19937_64 rng(505);
  std::vector<double> shortfall;
  for (int i = 0; i < 50; ++i) {
    auto g = testing::random_gains(2, 2, rng, 1e-11, 1e-7, 1e-14, 1e-9);
    g.set_gamma(gamma_from_cancellation(cfg.cancellation_db));
    const auto st = random_state(4, rng);
    SelectionContext ctx{g, st, rp, pdl, pul, false};
    Rng r(i);
    const auto sel = select_ues(ctx, r);
    const auto alloc = allocate_with_fallback(st, sel, g, rp, pc);
    const double got = slot_utility(alloc.decision, g, st, rp);
    const double opt = grid_optimum(g, st, rp, pdl, pul);
    shortfall.push_back(opt > 0.0 ? (opt - got) / opt : 0.0);
  }
  const double med = percentile(shortfall, 0.5);
  const double worst = *std::max_element(shortfall.begin(), shortfall.end());
  o.require(med <= 0.15, "median shortfall above 15%");
  const double t = seconds_since(t0);
  o.require(t < 300.0, "runtime");
  o.detail << "median shortfall vs grid optimum " << 100.0 * med << "%, worst " << 100.0 * worst << "%, "
           << t << " s";
  return o;
}

// ---------------------------------------------------------------------------

struct Runs {
  std::map<std::string, std::vector<DropResult>> by_label;

  static std::string label(Variant v, double c) { return to_string(v) + "@" + format_cancellation(c); }
  const std::vector<DropResult>& at(Variant v, double c) const { return by_label.at(label(v, c)); }
};

RunConfig scaled(Scenario s) {
  RunConfig c;
  c.scenario = s;
  c.slots = 200;
  c.drops = 5;
  c.seed = 20240611;
  return c;
}

const double kLevels[] = {75.0, 85.0, 95.0, 105.0, kInf};

Runs run_indoor() {
  Runs runs;
  RunConfig c = scaled(Scenario::Indoor);
  for (Variant v : {Variant::HD, Variant::RR_HD}) {
    c.variant = v;
    c.cancellation_db = kInf;
    runs.by_label[Runs::label(v, kInf)] = run_drops(c);
  }
  for (double lv : kLevels) {
    c.variant = Variant::FD;
    c.cancellation_db = lv;
    c.trace = lv == 95.0;
    runs.by_label[Runs::label(Variant::FD, lv)] = run_drops(c);
  }
  c.trace = false;
  c.variant = Variant::RR_FD;
  c.cancellation_db = 85.0;
  runs.by_label[Runs::label(Variant::RR_FD, 85.0)] = run_drops(c);
  c.variant = Variant::FD_EnergyAware;
  c.cancellation_db = 75.0;
  runs.by_label[Runs::label(Variant::FD_EnergyAware, 75.0)] = run_drops(c);
  return runs;
}

Outcome scheduler_invariants(const Runs& indoor) {
  Outcome o;
  const RunConfig c = scaled(Scenario::Indoor);
  long long violations = 0, rows = 0, unbalanced = 0;
  double max_rate = 0.0;
  for (const auto& r : indoor.at(Variant::FD, 95.0)) {
    violations += r.hd_ue_violations;
    std::vector<double> jdl(r.joules_dl.size(), 0.0), jul(r.joules_ul.size(), 0.0);
    std::vector<double> bdl(r.bits_dl.size(), 0.0), bul(r.bits_ul.size(), 0.0);
    for (const auto& row : r.trace) {
      ++rows;
      if (row.dl_ue != kNoUe && row.dl_ue == row.ul_ue) ++violations;
      const int base = row.cell * c.indoor.ues_per_cell;
      if (row.dl_ue != kNoUe) {
        jdl[base + row.dl_ue] += row.p_dl * c.slot_duration_s;
        bdl[base + row.dl_ue] += row.rate_dl * c.slot_duration_s;
      }
      if (row.ul_ue != kNoUe) {
        jul[base + row.ul_ue] += row.p_ul * c.slot_duration_s;
        bul[base + row.ul_ue] += row.rate_ul * c.slot_duration_s;
      }
      max_rate = std::max({max_rate, row.rate_dl, row.rate_ul});
    }
    if (jdl != r.joules_dl || jul != r.joules_ul || bdl != r.bits_dl || bul != r.bits_ul) ++unbalanced;
    max_rate = std::max(max_rate, r.max_rate);
  }
  for (const auto& [_, results] : indoor.by_label)
    for (const auto& r : results) max_rate = std::max(max_rate, r.max_rate);
  o.require(rows == 5LL * 200 * 9, "trace incomplete");
  o.require(violations == 0, "half-duplex UE constraint");
  o.require(unbalanced == 0, "energy ledger");
  o.require(max_rate <= 60e6, "rate above 60 Mbps");
  o.detail << rows << " cell-slots, " << violations << " UE conflicts, " << unbalanced
           << " unbalanced drops, max rate " << max_rate / 1e6 << " Mbps";
  return o;
}

Metrics metrics_of(const Runs& runs, Scenario s, Variant v, double lv) {
  RunConfig c = scaled(s);
  c.variant = v;
  c.cancellation_db = lv;
  return aggregate(c, runs.at(v, lv), runs.at(baseline_of(v), kInf));
}

Outcome indoor_gain(const Runs& indoor, double& fd95_gain) {
  Outcome o;
  std::vector<double> gains;
  for (double lv : kLevels) gains.push_back(metrics_of(indoor, Scenario::Indoor, Variant::FD, lv).dl.gain_pct);
  fd95_gain = gains[2];
  o.require(gains[4] >= 75.0 && gains[4] <= 115.0, "FD@inf outside [75, 115]");
  o.require(gains[2] >= 70.0 && gains[2] <= 115.0, "FD@95 outside [70, 115]");
  o.require(gains[0] >= 35.0 && gains[0] <= 80.0, "FD@75 outside [35, 80]");
  for (std::size_t i = 1; i < gains.size(); ++i)
    o.require(gains[i] >= gains[i - 1] - 5.0, "not monotone in cancellation");
  o.detail << "DL gain %";
  for (std::size_t i = 0; i < gains.size(); ++i)
    o.detail << ' ' << format_cancellation(kLevels[i]) << ':' << gains[i];
  return o;
}

Outcome indoor_modes(const Runs& indoor) {
  Outcome o;
  const auto m105 = metrics_of(indoor, Scenario::Indoor, Variant::FD, 105.0);
  const auto m75 = metrics_of(indoor, Scenario::Indoor, Variant::FD, 75.0);
  o.require(m105.frac_fd >= 0.90, "FD@105 FD share below 90%");
  o.require(m75.frac_fd < m105.frac_fd, "FD@75 share not below FD@105");
  o.detail << "FD share FD@75 " << 100.0 * m75.frac_fd << "%, FD@105 " << 100.0 * m105.frac_fd << "%";
  return o;
}

Outcome round_robin(const Runs& indoor) {
  Outcome o;
  const auto fd = pooled_rates(indoor.at(Variant::RR_FD, 85.0), Direction::Downlink);
  const auto hd = pooled_rates(indoor.at(Variant::RR_HD, kInf), Direction::Downlink);
  int none = 0;
  for (std::size_t i = 0; i < fd.size(); ++i)
    if (fd[i] <= hd[i]) ++none;
  const double share = static_cast<double>(none) / fd.size();
  o.require(share >= 0.5, "share below 50%");
  o.detail << none << '/' << fd.size() << " UEs (" << 100.0 * share << "%) without DL gain at FD@85";
  return o;
}

Outcome outdoor(double indoor_fd95_gain) {
  Outcome o;
  Runs runs;
  RunConfig c = scaled(Scenario::Outdoor);
  c.variant = Variant::HD;
  c.cancellation_db = kInf;
  runs.by_label[Runs::label(Variant::HD, kInf)] = run_drops(c);
  c.variant = Variant::FD;
  c.cancellation_db = 95.0;
  runs.by_label[Runs::label(Variant::FD, 95.0)] = run_drops(c);
  const auto fd = metrics_of(runs, Scenario::Outdoor, Variant::FD, 95.0);
  RunConfig h = scaled(Scenario::Outdoor);
  h.variant = Variant::HD;
  const auto hd = aggregate(h, runs.at(Variant::HD, kInf));
  o.require(fd.dl.gain_pct >= 30.0 && fd.dl.gain_pct <= 75.0, "FD@95 outside [30, 75]");
  o.require(fd.dl.gain_pct < indoor_fd95_gain, "not below indoor");
  o.require(hd.frac_idle > 0.0, "HD never idle");
  o.detail << "FD@95 DL gain " << fd.dl.gain_pct << "% (indoor " << indoor_fd95_gain << "%), HD idle share "
           << 100.0 * hd.frac_idle << "%";
  return o;
}

double total_ee(const std::vector<DropResult>& rs) {
  double bits = 0.0, joules = 0.0;
  for (const auto& r : rs) {
    for (double b : r.bits_dl) bits += b;
    for (double b : r.bits_ul) bits += b;
    for (double j : r.joules_dl) joules += j;
    for (double j : r.joules_ul) joules += j;
  }
  return joules > 0.0 ? bits / joules : 0.0;
}

Outcome energy(const Runs& indoor) {
  Outcome o;
  const double hd = total_ee(indoor.at(Variant::HD, kInf));
  const double fd = total_ee(indoor.at(Variant::FD, 95.0));
  const double ea75 = metrics_of(indoor, Scenario::Indoor, Variant::FD_EnergyAware, 75.0).dl.ee_bits_per_joule;
  const double fd75 = metrics_of(indoor, Scenario::Indoor, Variant::FD, 75.0).dl.ee_bits_per_joule;
  o.require(hd >= 2.0 * fd, "FD@95 not 2x below HD");
  o.require(ea75 >= 5.0 * fd75, "energy-aware gain below 5x");
  o.detail << "EE HD " << hd << " b/J vs FD@95 " << fd << " b/J (" << hd / fd << "x); DL EE FD@75 energy-aware "
           << ea75 << " vs plain " << fd75 << " (" << ea75 / fd75 << "x)";
  return o;
}

}  // namespace

int main() {
  int failed = 0;
  const auto report = [&](int n, const char* name, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << name << "): " << o.detail.str()
              << std::endl;
    if (!o.pass) ++failed;
  };
  report(1, "channel exactness", channel_exactness());
  report(2, "GP core", gp_core());
  report(3, "SP monotonicity", sp_monotonicity());
  report(4, "greedy selection vs exhaustive", selection_oracle());
  report(5, "joint near-optimality", joint_near_optimality());

  const Runs indoor = run_indoor();
  double fd95 = 0.0;
  report(6, "scheduler invariants", scheduler_invariants(indoor));
  report(7, "indoor FD vs HD gain", indoor_gain(indoor, fd95));
  report(8, "indoor mode shares", indoor_modes(indoor));
  report(9, "round-robin FD downlink", round_robin(indoor));
  report(10, "outdoor FD vs HD", outdoor(fd95));
  report(11, "energy efficiency ordering", energy(indoor));

  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
