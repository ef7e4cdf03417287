#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "fdcell/channel.hpp"

namespace fdcell::testing {

// Gains with every entry set to `fill`, noise 1e-13 W everywhere.
inline ChannelGains uniform_gains(int cells, int ues_per_cell, double fill = 1e-12) {
  std::vector<int> offsets, ue_cell;
  for (int b = 0; b < cells; ++b) {
    offsets.push_back(b * ues_per_cell);
    for (int k = 0; k < ues_per_cell; ++k) ue_cell.push_back(b);
  }
  ChannelGains g(cells, offsets, ue_cell);
  const int U = cells * ues_per_cell;
  for (int b = 0; b < cells; ++b) {
    g.set_noise_bs(b, 1e-13);
    for (int c = 0; c < cells; ++c)
      if (b != c) g.set_bs_bs(b, c, fill);
    for (int u = 0; u < U; ++u) g.set_bs_ue(b, u, fill);
  }
  for (int u = 0; u < U; ++u) {
    g.set_noise_ue(u, 1e-13);
    for (int v = u + 1; v < U; ++v) g.set_ue_ue(u, v, fill);
  }
  return g;
}

// Log-uniform random gains: serving links in [lo_own, hi_own], cross links in [lo_x, hi_x].
inline ChannelGains random_gains(int cells, int ues_per_cell, std::mt19937_64& rng, double lo_own = 1e-11,
                                 double hi_own = 1e-7, double lo_x = 1e-15, double hi_x = 1e-10) {
  auto g = uniform_gains(cells, ues_per_cell);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto draw = [&](double lo, double hi) { return lo * std::pow(hi / lo, u(rng)); };
  const int U = cells * ues_per_cell;
  for (int b = 0; b < cells; ++b) {
    for (int c = b + 1; c < cells; ++c) g.set_bs_bs(b, c, draw(lo_x, hi_x));
    for (int v = 0; v < U; ++v)
      g.set_bs_ue(b, v, g.serving_cell(v) == b ? draw(lo_own, hi_own) : draw(lo_x, hi_x));
  }
  for (int v = 0; v < U; ++v)
    for (int w = v + 1; w < U; ++w) g.set_ue_ue(v, w, draw(lo_x, hi_x));
  return g;
}

}  // namespace fdcell::testing
