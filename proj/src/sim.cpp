#include "fdcell/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <openssl/sha.h>

namespace fdcell {

namespace {

const std::map<Variant, std::string> kVariantNames = {
    {Variant::HD, "HD"},           {Variant::FD, "FD"},
    {Variant::RR_HD, "RR_HD"},     {Variant::RR_FD, "RR_FD"},
    {Variant::FD_FDUE, "FD_FDUE"}, {Variant::FD_EnergyAware, "FD_EnergyAware"},
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng stream(std::uint64_t seed_of_drop, std::uint32_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed_of_drop), static_cast<std::uint32_t>(seed_of_drop >> 32), id};
  return Rng(seq);
}

}  // namespace

std::string to_string(Variant v) { return kVariantNames.at(v); }

std::string to_string(Scenario s) { return s == Scenario::Indoor ? "indoor" : "outdoor"; }

Variant variant_from_string(const std::string& s) {
  for (const auto& [v, name] : kVariantNames)
    if (name == s) return v;
  throw ConfigError("unknown variant: " + s);
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "indoor") return Scenario::Indoor;
  if (s == "outdoor") return Scenario::Outdoor;
  throw ConfigError("unknown scenario: " + s);
}

Variant baseline_of(Variant v) {
  return v == Variant::RR_FD || v == Variant::RR_HD ? Variant::RR_HD : Variant::HD;
}

bool is_full_duplex(Variant v) { return v != Variant::HD && v != Variant::RR_HD; }

void RunConfig::validate() const {
  if (slots < 1) throw ConfigError("slots must be >= 1");
  if (drops < 1) throw ConfigError("drops must be >= 1");
  if (!(bandwidth_hz > 0.0)) throw ConfigError("bandwidth must be positive");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
  if (!std::isfinite(p_dl_max_dbm) || !std::isfinite(p_ul_max_dbm))
    throw ConfigError("power caps must be finite");
  if (std::isnan(cancellation_db) || cancellation_db < 0.0)
    throw ConfigError("cancellation must be >= 0 dB or inf");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be >= 0");
  if (!(slot_duration_s > 0.0)) throw ConfigError("slot duration must be positive");
  if (jobs < 0) throw ConfigError("jobs must be >= 0");
  if (scenario == Scenario::Indoor) {
    if (indoor.grid_side < 1 || !(indoor.room_side > 0.0) || indoor.ues_per_cell < 1)
      throw ConfigError("invalid indoor dimensions");
  } else {
    if (outdoor.n_cells < 1 || outdoor.ues_per_cell < 1 || !(outdoor.hex_apothem > 0.0) ||
        !(outdoor.cell_radius > 0.0) || outdoor.min_bs_distance < 0.0)
      throw ConfigError("invalid outdoor dimensions");
  }
}

ChannelParams RunConfig::channel() const {
  ChannelParams p = scenario == Scenario::Indoor ? ChannelParams::indoor() : ChannelParams::outdoor();
  p.bandwidth_hz = bandwidth_hz;
  return p;
}

RateParams RunConfig::rates() const {
  RateParams r;
  r.bandwidth_hz = bandwidth_hz;
  r.below_min = below_min;
  return r;
}

PowerConfig RunConfig::power_config() const {
  PowerConfig p = power;
  p.p_dl_max = dbm_to_watts(p_dl_max_dbm);
  p.p_ul_max = dbm_to_watts(p_ul_max_dbm);
  return p;
}

int RunConfig::num_cells() const {
  return scenario == Scenario::Indoor ? indoor.grid_side * indoor.grid_side : outdoor.n_cells;
}

int RunConfig::ues_per_cell() const {
  return scenario == Scenario::Indoor ? indoor.ues_per_cell : outdoor.ues_per_cell;
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["scenario"] = to_string(cfg.scenario);
  j["variant"] = to_string(cfg.variant);
  j["cancellation_db"] = format_cancellation(cfg.cancellation_db);
  j["slots"] = cfg.slots;
  j["drops"] = cfg.drops;
  j["bandwidth_hz"] = cfg.bandwidth_hz;
  j["beta"] = cfg.beta;
  j["p_dl_max_dbm"] = cfg.p_dl_max_dbm;
  j["p_ul_max_dbm"] = cfg.p_ul_max_dbm;
  j["seed"] = cfg.seed;
  j["kappa"] = cfg.kappa;
  j["slot_duration_s"] = cfg.slot_duration_s;
  j["below_min_se"] = cfg.below_min == BelowMinSe::Outage ? "outage" : "floor";
  j["indoor"] = {{"grid_side", cfg.indoor.grid_side},
                 {"room_side_m", cfg.indoor.room_side},
                 {"ues_per_cell", cfg.indoor.ues_per_cell},
                 {"wrap_around", cfg.indoor.wrap_around}};
  j["outdoor"] = {{"n_cells", cfg.outdoor.n_cells},
                  {"ues_per_cell", cfg.outdoor.ues_per_cell},
                  {"hex_apothem_m", cfg.outdoor.hex_apothem},
                  {"cell_radius_m", cfg.outdoor.cell_radius},
                  {"min_bs_distance_m", cfg.outdoor.min_bs_distance}};
  j["power"] = {{"floor_fraction", cfg.power.floor_fraction},
                {"epsilon", cfg.power.epsilon},
                {"max_outer", cfg.power.max_outer},
                {"gp_tol", cfg.power.inner.tol},
                {"gp_max_iter", cfg.power.inner.max_iter},
                {"safeguard", cfg.power.safeguard},
                {"trim_saturated", cfg.power.trim_saturated}};
  return j;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  os << "slot,cell,mode,dl_ue,ul_ue,p_dl_dbm,p_ul_dbm,rate_dl_bps,rate_ul_bps,attempts,outer_iterations,converged\n";
  os << std::setprecision(10);
  const auto dbm = [](double w) { return w > 0.0 ? watts_to_dbm(w) : -kInf; };
  const auto mode = [](char m) {
    switch (m) {
      case 'F': return "FD";
      case 'D': return "HD-DL";
      case 'U': return "HD-UL";
      default: return "IDLE";
    }
  };
  for (const auto& r : rows) {
    os << r.slot << ',' << r.cell << ',' << mode(r.mode) << ',' << r.dl_ue << ',' << r.ul_ue << ','
       << dbm(r.p_dl) << ',' << dbm(r.p_ul) << ',' << r.rate_dl << ',' << r.rate_ul << ','
       << r.attempts << ',' << r.outer_iterations << ',' << (r.converged ? 1 : 0) << '\n';
  }
}

std::uint64_t drop_seed(std::uint64_t seed, int drop) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(drop) + 1));
}

DropSetup make_drop(const RunConfig& cfg, std::uint64_t seed_of_drop) {
  Rng topo_rng = stream(seed_of_drop, 1);
  Rng gain_rng = stream(seed_of_drop, 2);
  DropSetup s;
  s.topology = cfg.scenario == Scenario::Indoor ? build_indoor(cfg.indoor, topo_rng)
                                                : build_outdoor(cfg.outdoor, topo_rng);
  s.gains = build_gains(s.topology, cfg.channel(), gain_rng);
  return s;
}

DropResult run_drop(const RunConfig& cfg, int drop) {
  cfg.validate();
  const std::uint64_t seed_of_drop = drop_seed(cfg.seed, drop);
  DropResult res = simulate(cfg, make_drop(cfg, seed_of_drop), seed_of_drop);
  res.drop = drop;
  return res;
}

DropResult simulate(const RunConfig& cfg, DropSetup setup, std::uint64_t seed_of_drop) {
  cfg.validate();
  ChannelGains& g = setup.gains;
  const double gamma = gamma_from_cancellation(cfg.cancellation_db);
  const Variant v = cfg.variant;
  g.set_gamma(is_full_duplex(v) ? gamma : 0.0);
  g.set_gamma_ue(v == Variant::FD_FDUE ? gamma : 0.0);

  Rng sched_rng = stream(seed_of_drop, 3);
  const RateParams rp = cfg.rates();
  const PowerConfig pc = cfg.power_config();
  const int B = g.num_cells();
  const int U = g.num_ues();
  const double T = cfg.slot_duration_s;

  DropResult res;
  res.drop_seed = seed_of_drop;
  res.slots = cfg.slots;
  res.slot_duration_s = T;
  res.ue_cell = setup.topology.ue_cells();
  res.bits_dl.assign(U, 0.0);
  res.bits_ul.assign(U, 0.0);
  res.joules_dl.assign(U, 0.0);
  res.joules_ul.assign(U, 0.0);

  PFState st = PFState::initial(U, cfg.bandwidth_hz * rp.min_se, cfg.beta);
  std::vector<int> per_cell(B);
  for (int b = 0; b < B; ++b) per_cell[b] = g.ues_in_cell(b);
  RoundRobinScheduler rr(per_cell);

  for (int t = 0; t < cfg.slots; ++t) {
    const Direction slot_dir = t % 2 == 0 ? Direction::Downlink : Direction::Uplink;
    SelectionContext ctx{g, st, rp, pc.p_dl_max, pc.p_ul_max, v == Variant::FD_FDUE};
    SlotDecision dec;
    Allocation alloc;
    bool allocated = false;
    switch (v) {
      case Variant::RR_HD:
      case Variant::RR_FD:
        dec = rr.select(slot_dir, v == Variant::RR_FD, pc.p_dl_max, pc.p_ul_max, sched_rng);
        break;
      case Variant::HD:
      case Variant::FD:
      case Variant::FD_FDUE:
      case Variant::FD_EnergyAware: {
        const Selection sel = v == Variant::HD ? hd_select_ues(ctx, slot_dir, sched_rng) : select_ues(ctx, sched_rng);
        if (sel.decision.empty()) {
          dec = sel.decision;
          break;
        }
        std::optional<LinkValues> penalty;
        if (v == Variant::FD_EnergyAware && cfg.kappa > 0.0)
          penalty = energy_penalty_weights(setup.topology, sel.decision, cfg.kappa);
        alloc = allocate_with_fallback(st, sel, g, rp, pc, penalty ? &*penalty : nullptr);
        allocated = true;
        dec = alloc.decision;
        res.pruned_links += static_cast<long long>(alloc.pruned.size());
        break;
      }
    }

    const LinkRates rates = evaluate_rates(dec, g, rp);
    for (int b = 0; b < B; ++b) {
      const bool dl = dec.has(b, Direction::Downlink) && dec.p_dl[b] > 0.0;
      const bool ul = dec.has(b, Direction::Uplink) && dec.p_ul[b] > 0.0;
      if (dl && ul) ++res.cells_fd;
      else if (dl || ul) ++res.cells_hd;
      else ++res.cells_idle;
      if (dl && ul && dec.dl_ue[b] == dec.ul_ue[b]) ++res.hd_ue_violations;
      if (dl) {
        const int u = g.ue_index(b, dec.dl_ue[b]);
        res.bits_dl[u] += rates.dl[b] * T;
        res.joules_dl[u] += dec.p_dl[b] * T;
        res.max_rate = std::max(res.max_rate, rates.dl[b]);
      }
      if (ul) {
        const int u = g.ue_index(b, dec.ul_ue[b]);
        res.bits_ul[u] += rates.ul[b] * T;
        res.joules_ul[u] += dec.p_ul[b] * T;
        res.max_rate = std::max(res.max_rate, rates.ul[b]);
      }
      if (cfg.trace) {
        TraceRow row;
        row.slot = t;
        row.cell = b;
        row.mode = dl && ul ? 'F' : dl ? 'D' : ul ? 'U' : '-';
        row.dl_ue = dl ? dec.dl_ue[b] : kNoUe;
        row.ul_ue = ul ? dec.ul_ue[b] : kNoUe;
        row.p_dl = dl ? dec.p_dl[b] : 0.0;
        row.p_ul = ul ? dec.p_ul[b] : 0.0;
        row.rate_dl = dl ? rates.dl[b] : 0.0;
        row.rate_ul = ul ? rates.ul[b] : 0.0;
        if (allocated) {
          row.attempts = alloc.attempts;
          row.outer_iterations = alloc.outer_iterations;
          row.converged = alloc.converged;
        }
        res.trace.push_back(row);
      }
    }
    st = update_state(st, dec, rates, g);
  }
  return res;
}

std::vector<DropResult> run_drops(const RunConfig& cfg) {
  cfg.validate();
  std::vector<DropResult> out(cfg.drops);
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const int workers = std::min(cfg.drops, cfg.jobs > 0 ? cfg.jobs : hw);
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto work = [&] {
    for (int d = next++; d < cfg.drops; d = next++) {
      try {
        out[d] = run_drop(cfg, d);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
  return out;
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<double> pooled_rates(const std::vector<DropResult>& results, Direction d) {
  std::vector<double> out;
  for (const auto& r : results)
    for (size_t u = 0; u < r.ue_cell.size(); ++u)
      out.push_back(d == Direction::Downlink ? r.avg_rate_dl(static_cast<int>(u)) : r.avg_rate_ul(static_cast<int>(u)));
  return out;
}

namespace {

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double gain_pct(double x, double base) { return base > 0.0 ? (x / base - 1.0) * 100.0 : 0.0; }

DirectionMetrics direction_metrics(const std::vector<DropResult>& results, const std::vector<DropResult>& baseline,
                                   Direction d, const std::vector<double>& rates) {
  DirectionMetrics m;
  m.mean_tput_bps = mean(rates);
  m.median_tput_bps = percentile(rates, 0.5);
  m.edge5_bps = percentile(rates, 0.05);
  double bits = 0.0, joules = 0.0;
  for (const auto& r : results) {
    const auto& b = d == Direction::Downlink ? r.bits_dl : r.bits_ul;
    const auto& j = d == Direction::Downlink ? r.joules_dl : r.joules_ul;
    bits += std::accumulate(b.begin(), b.end(), 0.0);
    joules += std::accumulate(j.begin(), j.end(), 0.0);
  }
  m.ee_bits_per_joule = joules > 0.0 ? bits / joules : 0.0;
  if (!baseline.empty()) {
    const auto base = pooled_rates(baseline, d);
    m.gain_pct = gain_pct(m.mean_tput_bps, mean(base));
    m.median_gain_pct = gain_pct(m.median_tput_bps, percentile(base, 0.5));
  }
  return m;
}

}  // namespace

Metrics aggregate(const RunConfig& cfg, const std::vector<DropResult>& results,
                  const std::vector<DropResult>& baseline) {
  Metrics m;
  m.scenario = cfg.scenario;
  m.variant = cfg.variant;
  m.cancellation_db = cfg.cancellation_db;
  m.per_ue_dl = pooled_rates(results, Direction::Downlink);
  m.per_ue_ul = pooled_rates(results, Direction::Uplink);
  m.dl = direction_metrics(results, baseline, Direction::Downlink, m.per_ue_dl);
  m.ul = direction_metrics(results, baseline, Direction::Uplink, m.per_ue_ul);
  long long fd = 0, hd = 0, idle = 0;
  for (const auto& r : results) {
    fd += r.cells_fd;
    hd += r.cells_hd;
    idle += r.cells_idle;
  }
  const double total = static_cast<double>(fd + hd + idle);
  if (total > 0.0) {
    m.frac_fd = static_cast<double>(fd) / total;
    m.frac_hd = static_cast<double>(hd) / total;
    m.frac_idle = static_cast<double>(idle) / total;
  }
  return m;
}

std::string format_cancellation(double db) {
  if (std::isinf(db)) return "inf";
  std::ostringstream os;
  os << std::setprecision(10) << db;
  return os.str();
}

double parse_cancellation(const std::string& s) {
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "inf" || lower == "infinity") return kInf;
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("invalid cancellation value: " + s);
  }
  if (used != s.size() || !(v >= 0.0) || !std::isfinite(v)) throw ConfigError("invalid cancellation value: " + s);
  return v;
}

void write_metrics_csv(std::ostream& os, const std::vector<Metrics>& rows) {
  os << "scenario,variant,cancellation_db,direction,mean_tput_bps,gain_pct,edge5_bps,ee_bits_per_joule,"
        "frac_fd,frac_hd,frac_idle\n";
  os << std::setprecision(17);
  for (const auto& m : rows) {
    for (Direction d : {Direction::Downlink, Direction::Uplink}) {
      const auto& x = d == Direction::Downlink ? m.dl : m.ul;
      os << to_string(m.scenario) << ',' << to_string(m.variant) << ',' << format_cancellation(m.cancellation_db)
         << ',' << (d == Direction::Downlink ? "dl" : "ul") << ',' << x.mean_tput_bps << ',' << x.gain_pct << ','
         << x.edge5_bps << ',' << x.ee_bits_per_joule << ',' << m.frac_fd << ',' << m.frac_hd << ','
         << m.frac_idle << '\n';
    }
  }
}

std::vector<Metrics> read_metrics_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("scenario,variant,", 0) != 0)
    throw ConfigError("metrics.csv: missing header");
  std::vector<Metrics> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 11) throw ConfigError("metrics.csv: expected 11 columns");
    const Scenario sc = scenario_from_string(f[0]);
    const Variant v = variant_from_string(f[1]);
    const double canc = parse_cancellation(f[2]);
    Metrics* m = nullptr;
    for (auto& x : out)
      if (x.scenario == sc && x.variant == v && x.cancellation_db == canc) m = &x;
    if (!m) {
      out.emplace_back();
      m = &out.back();
      m->scenario = sc;
      m->variant = v;
      m->cancellation_db = canc;
    }
    DirectionMetrics& d = f[3] == "dl" ? m->dl : m->ul;
    if (f[3] != "dl" && f[3] != "ul") throw ConfigError("metrics.csv: bad direction " + f[3]);
    d.mean_tput_bps = std::stod(f[4]);
    d.gain_pct = std::stod(f[5]);
    d.edge5_bps = std::stod(f[6]);
    d.ee_bits_per_joule = std::stod(f[7]);
    m->frac_fd = std::stod(f[8]);
    m->frac_hd = std::stod(f[9]);
    m->frac_idle = std::stod(f[10]);
  }
  return out;
}

void write_cdf_csv(std::ostream& os, const Metrics& m) {
  auto dl = m.per_ue_dl;
  auto ul = m.per_ue_ul;
  std::sort(dl.begin(), dl.end());
  std::sort(ul.begin(), ul.end());
  os << "rank,dl_bps,ul_bps\n" << std::setprecision(17);
  for (size_t i = 0; i < dl.size(); ++i) os << i << ',' << dl[i] << ',' << ul[i] << '\n';
}

std::string blob_hash(const std::string& content) {
  const std::string data = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
  std::ostringstream os;
  for (unsigned char c : digest) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(c);
  return os.str();
}

void persist(const std::filesystem::path& dir, const RunOutput& out,
             const std::vector<std::pair<std::string, std::vector<TraceRow>>>& traces) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "metrics.csv");
    write_metrics_csv(f, out.metrics);
  }
  std::map<Variant, int> count;
  for (const auto& m : out.metrics) ++count[m.variant];
  for (const auto& m : out.metrics) {
    std::string name = "cdf_" + to_string(m.variant);
    if (count[m.variant] > 1) name += "_" + format_cancellation(m.cancellation_db);
    std::ofstream f(dir / (name + ".csv"));
    write_cdf_csv(f, m);
  }
  for (const auto& [name, rows] : traces) {
    std::ofstream f(dir / ("trace_" + name + ".csv"));
    write_trace_csv(f, rows);
  }
  std::ofstream f(dir / "manifest.json");
  f << out.manifest.dump(2) << '\n';
}

}  // namespace fdcell
