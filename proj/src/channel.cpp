#include "fdcell/channel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace fdcell {

double los_probability_indoor(double r_km) {
  if (!(r_km >= 0.0)) throw DomainError("indoor LOS probability needs R >= 0");
  if (r_km <= 0.018) return 1.0;
  if (r_km < 0.037) return std::exp(-(r_km - 0.018) / 0.027);
  return 0.5;
}

double los_probability_outdoor(double r_km) {
  if (!(r_km > 0.0)) throw DomainError("outdoor LOS probability needs R > 0");
  if (r_km < 1e-6) return 1.0;  // below 1 mm the formula is numerically at its limit
  return 0.5 - std::min(0.5, 5.0 * std::exp(-0.156 / r_km)) +
         std::min(0.5, 5.0 * std::exp(-r_km / 0.03));
}

double pathloss_indoor_intra(double r_km, bool los) {
  if (!(r_km > 0.0)) throw DomainError("path loss needs R > 0");
  return los ? 89.5 + 16.9 * std::log10(r_km) : 147.4 + 43.3 * std::log10(r_km);
}

double pathloss_indoor_inter(double r_km) {
  if (!(r_km > 0.0)) throw DomainError("path loss needs R > 0");
  const double lr = std::log10(r_km);
  return std::max(131.1 + 42.8 * lr, 147.4 + 43.3 * lr);
}

double pathloss_outdoor(OutdoorLink kind, double r_km, bool los) {
  if (!(r_km > 0.0)) throw DomainError("path loss needs R > 0");
  const double lr = std::log10(r_km);
  switch (kind) {
    case OutdoorLink::BsBs:
      if (!los) return 169.36 + 40.0 * lr;
      return r_km < 2.0 / 3.0 ? 89.5 + 16.9 * lr : 101.9 + 40.0 * lr;
    case OutdoorLink::BsUe:
      return los ? 103.8 + 20.9 * lr : 145.4 + 37.5 * lr;
    case OutdoorLink::UeUe:
      return r_km <= 0.050 ? 98.45 + 20.0 * lr : 175.78 + 40.0 * lr;
  }
  return 0.0;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0 - 3.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

double thermal_noise_watts(double bandwidth_hz, double noise_figure_db, double density_dbm_hz) {
  return dbm_to_watts(density_dbm_hz + 10.0 * std::log10(bandwidth_hz) + noise_figure_db);
}

double gamma_from_cancellation(double cancellation_db) {
  if (std::isinf(cancellation_db) && cancellation_db > 0) return 0.0;
  return db_to_linear(-cancellation_db);
}

ChannelParams ChannelParams::indoor() { return ChannelParams{}; }

ChannelParams ChannelParams::outdoor() {
  ChannelParams p;
  p.scenario = Scenario::Outdoor;
  p.nf_bs_db = 13.0;
  p.nf_ue_db = 9.0;
  return p;
}

ChannelGains::ChannelGains(int num_cells, std::vector<int> ue_offsets, std::vector<int> ue_cell)
    : num_cells_(num_cells),
      num_ues_(static_cast<int>(ue_cell.size())),
      ue_offsets_(std::move(ue_offsets)),
      ue_cell_(std::move(ue_cell)),
      bs_ue_(static_cast<size_t>(num_cells_) * num_ues_, 0.0),
      ue_ue_(static_cast<size_t>(num_ues_) * num_ues_, 0.0),
      bs_bs_(static_cast<size_t>(num_cells_) * num_cells_, 0.0),
      noise_ue_(num_ues_, 0.0),
      noise_bs_(num_cells_, 0.0) {}

int ChannelGains::ues_in_cell(int b) const {
  const int end = b + 1 < num_cells_ ? ue_offsets_[b + 1] : num_ues_;
  return end - ue_offsets_[b];
}

void ChannelGains::set_ue_ue(int u, int v, double g) {
  ue_ue_[u * num_ues_ + v] = g;
  ue_ue_[v * num_ues_ + u] = g;
}

void ChannelGains::set_bs_bs(int b, int c, double g) {
  bs_bs_[b * num_cells_ + c] = g;
  bs_bs_[c * num_cells_ + b] = g;
}

void ChannelGains::write_csv(std::ostream& os) const {
  const int n = num_cells_ + num_ues_;
  const auto gain = [this](int src, int dst) -> double {
    if (src == dst) return 0.0;
    const bool sb = src < num_cells_;
    const bool db = dst < num_cells_;
    if (sb && db) return bs_bs(src, dst);
    if (sb) return bs_ue(src, dst - num_cells_);
    if (db) return bs_ue(dst, src - num_cells_);
    return ue_ue(src - num_cells_, dst - num_cells_);
  };
  os.precision(17);
  os << "node";
  for (int j = 0; j < n; ++j) os << ',' << j;
  os << '\n';
  for (int i = 0; i < n; ++i) {
    os << i;
    for (int j = 0; j < n; ++j) os << ',' << gain(i, j);
    os << '\n';
  }
}

namespace {

enum class NodeKind { Bs, Ue };

// Draws one reciprocal link loss in dB (path loss + shadowing + penetration).
class LossModel {
 public:
  LossModel(const NetworkTopology& topo, const ChannelParams& params, Rng& rng)
      : topo_(topo), p_(params), rng_(rng) {}

  double draw(const Position& a, NodeKind ka, const Position& b, NodeKind kb) {
    const LinkGeometry geo = distance(a, b, topo_);
    const double r_km = std::max(geo.meters, p_.min_distance_m) / 1000.0;
    double pl = 0.0;
    double sigma = 0.0;
    if (p_.scenario == Scenario::Indoor) {
      if (geo.walls == 0) {
        const bool los = uniform_(rng_) < los_probability_indoor(r_km);
        pl = pathloss_indoor_intra(r_km, los);
        sigma = los ? p_.shadow_los_db : p_.shadow_nlos_db;
      } else {
        pl = pathloss_indoor_inter(r_km);
        sigma = p_.shadow_nlos_db;
        pl += p_.wall_loss_per_wall ? p_.wall_loss_db * geo.walls : p_.wall_loss_db;
      }
    } else if (ka == NodeKind::Ue && kb == NodeKind::Ue) {
      pl = pathloss_outdoor(OutdoorLink::UeUe, r_km, false);
      sigma = p_.shadow_ue_ue_db;
    } else {
      const bool los = uniform_(rng_) < los_probability_outdoor(r_km);
      if (ka == NodeKind::Bs && kb == NodeKind::Bs) {
        pl = pathloss_outdoor(OutdoorLink::BsBs, r_km, los);
        sigma = p_.shadow_bs_bs_db;
      } else {
        pl = pathloss_outdoor(OutdoorLink::BsUe, r_km, los);
        sigma = los ? p_.shadow_los_db : p_.shadow_nlos_db;
      }
    }
    const double shadow = p_.shadowing ? sigma * normal_(rng_) : 0.0;
    return std::max(0.0, pl + shadow);
  }

 private:
  const NetworkTopology& topo_;
  const ChannelParams& p_;
  Rng& rng_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace

ChannelGains build_gains(const NetworkTopology& topo, const ChannelParams& params, Rng& rng) {
  ChannelGains g(topo.num_cells(), topo.ue_offsets(), topo.ue_cells());
  LossModel model(topo, params, rng);
  const int B = topo.num_cells();
  const int U = topo.num_ues();

  std::vector<Position> ue_pos;
  ue_pos.reserve(U);
  for (const auto& c : topo.cells()) ue_pos.insert(ue_pos.end(), c.ues.begin(), c.ues.end());

  for (int b = 0; b < B; ++b)
    for (int u = 0; u < U; ++u)
      g.set_bs_ue(b, u, db_to_linear(-model.draw(topo.bs(b), NodeKind::Bs, ue_pos[u], NodeKind::Ue)));
  for (int u = 0; u < U; ++u)
    for (int v = u + 1; v < U; ++v)
      g.set_ue_ue(u, v, db_to_linear(-model.draw(ue_pos[u], NodeKind::Ue, ue_pos[v], NodeKind::Ue)));
  for (int b = 0; b < B; ++b)
    for (int c = b + 1; c < B; ++c)
      g.set_bs_bs(b, c, db_to_linear(-model.draw(topo.bs(b), NodeKind::Bs, topo.bs(c), NodeKind::Bs)));

  const double n_ue = thermal_noise_watts(params.bandwidth_hz, params.nf_ue_db, params.noise_density_dbm_hz);
  const double n_bs = thermal_noise_watts(params.bandwidth_hz, params.nf_bs_db, params.noise_density_dbm_hz);
  for (int u = 0; u < U; ++u) g.set_noise_ue(u, n_ue);
  for (int b = 0; b < B; ++b) g.set_noise_bs(b, n_bs);
  return g;
}

}  // namespace fdcell
