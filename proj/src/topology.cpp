#include "fdcell/topology.hpp"

#include <cmath>
#include <numbers>

namespace fdcell {

NetworkTopology::NetworkTopology(Layout layout, std::vector<Cell> cells, double room_side,
                                 int grid_side, bool wrap_around, double hex_apothem,
                                 double cell_radius)
    : layout_(layout),
      cells_(std::move(cells)),
      room_side_(room_side),
      grid_side_(grid_side),
      wrap_around_(wrap_around),
      hex_apothem_(hex_apothem),
      cell_radius_(cell_radius) {
  offsets_.reserve(cells_.size());
  for (const auto& c : cells_) {
    offsets_.push_back(total_ues_);
    total_ues_ += static_cast<int>(c.ues.size());
  }
}

std::vector<int> NetworkTopology::ue_cells() const {
  std::vector<int> out;
  out.reserve(total_ues_);
  for (int b = 0; b < num_cells(); ++b)
    out.insert(out.end(), cells_[b].ues.size(), b);
  return out;
}

NetworkTopology build_indoor(const IndoorConfig& cfg, Rng& rng) {
  if (!(cfg.room_side > 0.0) || !std::isfinite(cfg.room_side))
    throw ConfigError("indoor room_side must be positive");
  if (cfg.grid_side < 1) throw ConfigError("indoor grid_side must be >= 1");
  if (cfg.ues_per_cell < 1) throw ConfigError("indoor ues_per_cell must be >= 1");

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Cell> cells;
  const double L = cfg.room_side;
  for (int row = 0; row < cfg.grid_side; ++row) {
    for (int col = 0; col < cfg.grid_side; ++col) {
      Cell c;
      c.id = static_cast<int>(cells.size());
      c.bs = {(col + 0.5) * L, (row + 0.5) * L};
      c.ues.reserve(cfg.ues_per_cell);
      for (int k = 0; k < cfg.ues_per_cell; ++k) {
        const double ux = unit(rng);
        const double uy = unit(rng);
        c.ues.push_back({(col + ux) * L, (row + uy) * L});
      }
      cells.push_back(std::move(c));
    }
  }
  return NetworkTopology(Layout::IndoorGrid, std::move(cells), L, cfg.grid_side,
                         cfg.wrap_around);
}

bool inside_hexagon(const Position& p, double apothem) {
  const double ax = std::abs(p.x);
  const double ay = std::abs(p.y);
  return ay <= apothem && std::numbers::sqrt3 * ax + ay <= 2.0 * apothem;
}

NetworkTopology build_outdoor(const OutdoorConfig& cfg, Rng& rng) {
  if (cfg.n_cells < 1) throw ConfigError("outdoor n_cells must be >= 1");
  if (cfg.ues_per_cell < 1) throw ConfigError("outdoor ues_per_cell must be >= 1");
  if (!(cfg.hex_apothem > 0.0) || !(cfg.cell_radius > 0.0) || cfg.min_bs_distance < 0.0)
    throw ConfigError("outdoor dimensions must be positive");

  const double circumradius = 2.0 * cfg.hex_apothem / std::numbers::sqrt3;
  std::uniform_real_distribution<double> ux(-circumradius, circumradius);
  std::uniform_real_distribution<double> uy(-cfg.hex_apothem, cfg.hex_apothem);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Position> sites;
  int attempts = 0;
  while (static_cast<int>(sites.size()) < cfg.n_cells) {
    if (attempts++ >= cfg.max_attempts)
      throw GenerationError("could not place " + std::to_string(cfg.n_cells) +
                            " pico BSs with the required minimum spacing");
    const Position p{ux(rng), uy(rng)};
    if (!inside_hexagon(p, cfg.hex_apothem)) continue;
    bool ok = true;
    for (const auto& s : sites) {
      if (std::hypot(p.x - s.x, p.y - s.y) < cfg.min_bs_distance) {
        ok = false;
        break;
      }
    }
    if (ok) sites.push_back(p);
  }

  std::vector<Cell> cells;
  for (int b = 0; b < cfg.n_cells; ++b) {
    Cell c;
    c.id = b;
    c.bs = sites[b];
    for (int k = 0; k < cfg.ues_per_cell; ++k) {
      const double r = cfg.cell_radius * std::sqrt(unit(rng));
      const double th = 2.0 * std::numbers::pi * unit(rng);
      c.ues.push_back({c.bs.x + r * std::cos(th), c.bs.y + r * std::sin(th)});
    }
    cells.push_back(std::move(c));
  }
  return NetworkTopology(Layout::OutdoorHex, std::move(cells), 0.0, 0, false, cfg.hex_apothem,
                         cfg.cell_radius);
}

LinkGeometry distance(const Position& a, const Position& b, const NetworkTopology& topo) {
  if (topo.layout() == Layout::OutdoorHex)
    return {std::hypot(b.x - a.x, b.y - a.y), 0};

  const double L = topo.room_side();
  double dx = b.x - a.x;
  double dy = b.y - a.y;
  if (topo.wrap_around()) {
    const double S = topo.area_side();
    dx -= S * std::round(dx / S);
    dy -= S * std::round(dy / S);
  }
  // Room boundaries sit at integer multiples of L on the unrolled plane.
  const auto room = [L](double v) { return static_cast<long>(std::floor(v / L)); };
  const int walls = static_cast<int>(std::labs(room(a.x + dx) - room(a.x)) +
                                     std::labs(room(a.y + dy) - room(a.y)));
  return {std::hypot(dx, dy), walls};
}

nlohmann::json to_json(const NetworkTopology& topo) {
  nlohmann::json j;
  j["layout"] = topo.layout() == Layout::IndoorGrid ? "indoor_grid" : "outdoor_hex";
  j["room_side_m"] = topo.room_side();
  j["grid_side"] = topo.grid_side();
  j["wrap_around"] = topo.wrap_around();
  j["hex_apothem_m"] = topo.hex_apothem();
  j["cell_radius_m"] = topo.cell_radius();
  auto& cells = j["cells"] = nlohmann::json::array();
  for (const auto& c : topo.cells()) {
    nlohmann::json jc;
    jc["cell_id"] = c.id;
    jc["bs"] = {c.bs.x, c.bs.y};
    jc["ues"] = nlohmann::json::array();
    for (const auto& u : c.ues) jc["ues"].push_back({u.x, u.y});
    cells.push_back(std::move(jc));
  }
  return j;
}

NetworkTopology topology_from_json(const nlohmann::json& j) {
  const Layout layout =
      j.at("layout").get<std::string>() == "indoor_grid" ? Layout::IndoorGrid : Layout::OutdoorHex;
  std::vector<Cell> cells;
  for (const auto& jc : j.at("cells")) {
    Cell c;
    c.id = jc.at("cell_id").get<int>();
    c.bs = {jc.at("bs")[0].get<double>(), jc.at("bs")[1].get<double>()};
    for (const auto& u : jc.at("ues")) c.ues.push_back({u[0].get<double>(), u[1].get<double>()});
    cells.push_back(std::move(c));
  }
  return NetworkTopology(layout, std::move(cells), j.at("room_side_m").get<double>(),
                         j.at("grid_side").get<int>(), j.at("wrap_around").get<bool>(),
                         j.at("hex_apothem_m").get<double>(), j.at("cell_radius_m").get<double>());
}

}  // namespace fdcell
