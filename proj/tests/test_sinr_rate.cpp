#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fdcell/sinr_rate.hpp"
#include "fixtures.hpp"

using namespace fdcell;
using fdcell::testing::random_gains;
using fdcell::testing::uniform_gains;

TEST_CASE("downlink SINR of an isolated link") {
  auto g = uniform_gains(1, 1);
  g.set_bs_ue(0, 0, 1e-8);
  g.set_noise_ue(0, thermal_noise_watts(10e6, 8.0));
  auto dec = SlotDecision::idle(1);
  dec.set(0, Direction::Downlink, 0, 0.251);
  CHECK(downlink_sinr(0, dec, g) == doctest::Approx(9992.48998089278099).epsilon(1e-12));
}

TEST_CASE("symmetric cells see equal SINR") {
  auto g = uniform_gains(2, 1, 1e-11);
  g.set_bs_ue(0, 0, 1e-8);
  g.set_bs_ue(1, 1, 1e-8);
  auto dec = SlotDecision::idle(2);
  dec.set(0, Direction::Downlink, 0, 0.2);
  dec.set(1, Direction::Downlink, 0, 0.2);
  CHECK(downlink_sinr(0, dec, g) == doctest::Approx(downlink_sinr(1, dec, g)).epsilon(1e-14));
  CHECK(downlink_sinr(0, dec, g) == doctest::Approx(0.2 * 1e-8 / (1e-13 + 0.2 * 1e-11)).epsilon(1e-14));
}

TEST_CASE("uplink SINR with self-interference") {
  auto g = uniform_gains(1, 2, 1e-12);
  g.set_bs_ue(0, 1, 1e-9);
  auto dec = SlotDecision::idle(1);
  dec.set(0, Direction::Uplink, 1, 0.2);
  CHECK(uplink_sinr(0, dec, g) == doctest::Approx(0.2 * 1e-9 / 1e-13).epsilon(1e-14));

  const double pdl = dbm_to_watts(24.0);
  g.set_gamma(gamma_from_cancellation(95.0));
  dec.set(0, Direction::Downlink, 0, pdl);
  const double si = pdl * g.gamma();
  CHECK(watts_to_dbm(si) == doctest::Approx(-71.0).epsilon(1e-12));
  CHECK(uplink_sinr(0, dec, g) == doctest::Approx(0.2 * 1e-9 / (1e-13 + si)).epsilon(1e-14));
  // The downlink UE hears the uplink UE of its own cell.
  CHECK(downlink_sinr(0, dec, g) == doctest::Approx(pdl * 1e-12 / (1e-13 + 0.2 * 1e-12)).epsilon(1e-14));
}

TEST_CASE("interference terms follow the active links") {
  std::mt19937_64 rng(7);
  auto g = random_gains(3, 2, rng);
  auto dec = SlotDecision::idle(3);
  dec.set(0, Direction::Downlink, 0, 0.25);
  dec.set(1, Direction::Uplink, 1, 0.2);
  dec.set(2, Direction::Downlink, 1, 0.1);
  dec.set(2, Direction::Uplink, 0, 0.05);
  const int ue = g.ue_index(0, 0);
  const double expect_dl = 0.25 * g.bs_ue(0, ue) /
                           (g.noise_ue(ue) + 0.1 * g.bs_ue(2, ue) + 0.2 * g.ue_ue(g.ue_index(1, 1), ue) +
                            0.05 * g.ue_ue(g.ue_index(2, 0), ue));
  CHECK(downlink_sinr(0, dec, g) == doctest::Approx(expect_dl).epsilon(1e-13));
  const double expect_ul = 0.2 * g.bs_ue(1, g.ue_index(1, 1)) /
                           (g.noise_bs(1) + 0.25 * g.bs_bs(0, 1) + 0.1 * g.bs_bs(2, 1) +
                            0.05 * g.bs_ue(1, g.ue_index(2, 0)));
  CHECK(uplink_sinr(1, dec, g) == doctest::Approx(expect_ul).epsilon(1e-13));
}

TEST_CASE("rate mapping") {
  RateParams rp;
  CHECK(rate_from_sinr(63.0, rp) == doctest::Approx(60e6).epsilon(1e-14));
  CHECK(rate_from_sinr(1e6, rp) == 60e6);
  CHECK(rate_from_sinr(0.15, rp) == 0.0);
  CHECK(capped_se(0.15, rp) == doctest::Approx(0.2016338611696505).epsilon(1e-12));
  rp.below_min = BelowMinSe::Floor;
  CHECK(rate_from_sinr(0.15, rp) == doctest::Approx(2.6e6).epsilon(1e-14));
  CHECK(rate_from_sinr(0.0, rp) == doctest::Approx(2.6e6).epsilon(1e-14));
}

TEST_CASE("rate monotone in own power and interferer power") {
  std::mt19937_64 rng(3);
  RateParams rp;
  for (int trial = 0; trial < 200; ++trial) {
    auto g = random_gains(2, 2, rng);
    auto dec = SlotDecision::idle(2);
    dec.set(0, Direction::Downlink, 0, 0.01);
    dec.set(1, Direction::Downlink, 1, 0.01);
    dec.set(1, Direction::Uplink, 0, 0.01);
    double prev_own = -1.0, prev_int = 1e300;
    for (double p = 0.01; p <= 0.25; p += 0.02) {
      auto a = dec;
      a.p_dl[0] = p;
      const double own = rate_from_sinr(downlink_sinr(0, a, g), rp);
      CHECK(own >= prev_own);
      prev_own = own;
      auto b = dec;
      b.p_dl[1] = p;
      const double hit = downlink_sinr(0, b, g);
      CHECK(hit <= prev_int);
      prev_int = hit;
    }
    auto c = dec;
    c.clear(1, Direction::Uplink);
    CHECK(downlink_sinr(0, c, g) >= downlink_sinr(0, dec, g));
    const auto r = evaluate_rates(dec, g, rp);
    for (double x : r.dl) CHECK((x >= 0.0 && x <= 60e6));
    CHECK(r.ul[0] == 0.0);
  }
}

TEST_CASE("decision invariants") {
  auto dec = SlotDecision::idle(2);
  CHECK(dec.empty());
  dec.set(0, Direction::Downlink, 1, 0.2);
  dec.set(0, Direction::Uplink, 1, 0.1);
  CHECK(dec.active_links() == 2);
  CHECK_THROWS_AS(validate(dec, 0.25, 0.2, false), std::logic_error);
  CHECK_NOTHROW(validate(dec, 0.25, 0.2, true));
  dec.set(0, Direction::Uplink, 0, 0.3);
  CHECK_THROWS_AS(validate(dec, 0.25, 0.2, false), std::logic_error);
  dec.clear(0, Direction::Uplink);
  CHECK(dec.p_ul[0] == 0.0);
  CHECK_NOTHROW(validate(dec, 0.25, 0.2, false));
}
