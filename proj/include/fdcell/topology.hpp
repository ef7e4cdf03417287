#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace fdcell {

using Rng = std::mt19937_64;

/// Invalid user-supplied dimensions or counts.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Random deployment could not satisfy its placement constraints.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Position&) const = default;
};

enum class Layout { IndoorGrid, OutdoorHex };

struct Cell {
  int id = 0;
  Position bs;
  std::vector<Position> ues;
};

struct IndoorConfig {
  int grid_side = 3;          // rooms per row/column
  double room_side = 50.0;    // meters
  int ues_per_cell = 8;
  bool wrap_around = true;
};

struct OutdoorConfig {
  int n_cells = 12;
  int ues_per_cell = 10;
  double hex_apothem = 250.0;      // center-to-edge distance; the hexagon is 500 m flat to flat
  double cell_radius = 40.0;
  double min_bs_distance = 40.0;
  int max_attempts = 100000;       // BS placement draws before giving up
};

/// Shortest-path geometry of a link: length and the room walls it crosses.
struct LinkGeometry {
  double meters = 0.0;
  int walls = 0;
};

class NetworkTopology {
 public:
  NetworkTopology() = default;
  NetworkTopology(Layout layout, std::vector<Cell> cells, double room_side = 0.0,
                  int grid_side = 0, bool wrap_around = false, double hex_apothem = 0.0,
                  double cell_radius = 0.0);

  Layout layout() const { return layout_; }
  const std::vector<Cell>& cells() const { return cells_; }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_ues() const { return total_ues_; }
  int ues_in_cell(int b) const { return static_cast<int>(cells_[b].ues.size()); }

  /// Flat UE index over all cells, cell-major.
  int ue_index(int b, int k) const { return offsets_[b] + k; }
  const std::vector<int>& ue_offsets() const { return offsets_; }
  /// Serving cell of each flat UE index.
  std::vector<int> ue_cells() const;

  const Position& bs(int b) const { return cells_[b].bs; }
  const Position& ue(int b, int k) const { return cells_[b].ues[k]; }

  double room_side() const { return room_side_; }
  int grid_side() const { return grid_side_; }
  bool wrap_around() const { return wrap_around_; }
  double hex_apothem() const { return hex_apothem_; }
  double cell_radius() const { return cell_radius_; }

  /// Side of the square simulation area (indoor only).
  double area_side() const { return room_side_ * grid_side_; }

 private:
  Layout layout_ = Layout::IndoorGrid;
  std::vector<Cell> cells_;
  std::vector<int> offsets_;
  int total_ues_ = 0;
  double room_side_ = 0.0;
  int grid_side_ = 0;
  bool wrap_around_ = false;
  double hex_apothem_ = 0.0;
  double cell_radius_ = 0.0;
};

NetworkTopology build_indoor(const IndoorConfig& cfg, Rng& rng);
NetworkTopology build_outdoor(const OutdoorConfig& cfg, Rng& rng);

/// Indoor: minimum over the torus images when wrap-around is on, and the
/// number of room boundaries crossed by that segment. Outdoor: Euclidean,
/// no walls.
LinkGeometry distance(const Position& a, const Position& b, const NetworkTopology& topo);

/// True if p lies inside the flat-top hexagon of the given apothem centered at the origin.
bool inside_hexagon(const Position& p, double apothem);

nlohmann::json to_json(const NetworkTopology& topo);
NetworkTopology topology_from_json(const nlohmann::json& j);

}  // namespace fdcell
