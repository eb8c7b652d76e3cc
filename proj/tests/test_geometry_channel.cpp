#include <cmath>
#include <random>

#include "doctest.h"
#include "scdn/errors.hpp"
#include "scdn/geometry_channel.hpp"

using namespace scdn;

TEST_CASE("euclidean distance") {
  CHECK(euclidean_distance({0, 0, 0}, {0, 0, 0}) == 0.0);
  CHECK(euclidean_distance({0, 0, 0}, {3, 4, 0}) == 5.0);
  CHECK(euclidean_distance({10, 20, 30}, {10, 20, 130}) == 100.0);
  CHECK(euclidean_distance({1, 2, 3}, {4, 6, 8}) == euclidean_distance({4, 6, 8}, {1, 2, 3}));
}

TEST_CASE("elevation angle") {
  CHECK(elevation_angle_deg({0, 0, 100}, {0, 0, 0}) == doctest::Approx(90.0));
  CHECK(elevation_angle_deg({100, 0, 0}, {0, 0, 0}) == doctest::Approx(0.0));
  CHECK(elevation_angle_deg({0, 0, 50}, {0, 50, 0}) ==
        doctest::Approx(180.0 / M_PI * std::asin(50.0 / std::sqrt(5000.0))));
  CHECK_THROWS_AS(elevation_angle_deg({1, 1, 1}, {1, 1, 1}), Error);
}

TEST_CASE("LoS probability at reference angles") {
  const ChannelParams c = ChannelParams::defaults();
  CHECK(p_los(c, PathClass::A2G, 11.95) == doctest::Approx(1.0 / 12.95).epsilon(1e-12));
  CHECK(p_los(c, PathClass::A2G, 90.0) == doctest::Approx(0.99979).epsilon(1e-5));
  CHECK(p_los(c, PathClass::A2G, 0.0) == doctest::Approx(0.01546).epsilon(1e-3));
}

TEST_CASE("LoS probability increases with angle") {
  const ChannelParams c = ChannelParams::defaults();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 90.0);
  for (int i = 0; i < 1000; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    CHECK(p_los(c, PathClass::A2G, a) < p_los(c, PathClass::A2G, b));
    CHECK(p_los(c, PathClass::A2A, a) < p_los(c, PathClass::A2A, b));
  }
}

TEST_CASE("path loss") {
  ChannelParams c = ChannelParams::defaults();
  c.a2g.eta_los = 1.0;
  const double d0 = c.light_speed / (4.0 * M_PI * c.carrier_freq);
  CHECK(path_loss(c, PathClass::A2G, d0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(path_loss(c, PathClass::A2G, 2.0 * d0, 1.0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK_THROWS_AS(path_loss(c, PathClass::A2G, 0.0, 0.5), Error);

  const ChannelParams d = ChannelParams::defaults();
  const long double mu = 4.0L * 3.14159265358979323846264338327950288L * 2e9L / 299792458.0L;
  const long double expect = (mu * 100.0L) * (mu * 100.0L) *
                             (0.5L * std::pow(10.0L, 0.3L) + 0.5L * std::pow(10.0L, 2.3L));
  CHECK(path_loss(d, PathClass::A2G, 100.0, 0.5) == doctest::Approx(static_cast<double>(expect)).epsilon(1e-9));

  for (double p : {0.1, 0.5, 0.9}) {
    CHECK(path_loss(d, PathClass::A2G, 50.0, 1.0) <= path_loss(d, PathClass::A2G, 50.0, p));
    CHECK(path_loss(d, PathClass::A2G, 50.0, p) <= path_loss(d, PathClass::A2G, 50.0, 0.0));
  }
}

TEST_CASE("rate") {
  const ChannelParams c = ChannelParams::defaults();
  const double s2 = c.noise_power();
  CHECK(rate(c, 1.0, 0.0) == 0.0);
  CHECK(rate(c, 1.0, s2) == doctest::Approx(c.bandwidth));
  CHECK(rate(c, 1.0, 3.0 * s2) == doctest::Approx(2.0 * c.bandwidth));
  CHECK(rate(c, 2.0, 1e-3) < rate(c, 1.0, 1e-3));
  CHECK(s2 == doctest::Approx(std::pow(10.0, -17.4 - 3.0) * 2e6).epsilon(1e-12));
}

TEST_CASE("rate decreases with distance and increases with power") {
  const ChannelParams c = ChannelParams::defaults();
  const Position3 dev{0, 0, 0};
  double last = INFINITY;
  for (double x = 5.0; x < 200.0; x += 5.0) {
    const Position3 srv{x, 0, 30};
    const LinkState s = link_state(c, srv, dev, 0.2, 1e5, 1.0);
    CHECK(s.rate < last);
    last = s.rate;
  }
  const Position3 srv{10, 10, 30};
  CHECK(link_state(c, srv, dev, 0.1, 1e5, 1.0).rate < link_state(c, srv, dev, 0.2, 1e5, 1.0).rate);
}

TEST_CASE("link state classification") {
  const ChannelParams c = ChannelParams::defaults();
  const Position3 dev{0, 0, 0}, srv{0, 0, 40};
  const LinkState probe = link_state(c, srv, dev, 0.2, 1e5, 1.0);
  const double tmax = 1e5 / probe.rate;
  CHECK_FALSE(link_state(c, srv, dev, 0.2, 1e5, tmax).failed);
  CHECK(link_state(c, srv, dev, 0.2, 1e5, std::nextafter(tmax, 0.0)).failed);
  CHECK(link_state(c, srv, dev, 0.0, 1e5, 1.0).failed);

  CHECK(path_class_for({0, 0, 5}, {0, 0, 1}) == PathClass::A2A);
  CHECK(path_class_for({0, 0, 5}, {0, 0, 0}) == PathClass::A2G);
  CHECK(path_class_for({0, 0, 0}, {0, 0, 5}) == PathClass::A2G);
  CHECK(path_class_for({0, 0, 0}, {0, 0, 0}) == PathClass::A2G);
  CHECK(link_state(c, {0, 0, 20}, {3, 0, 2}, 0.2, 1e5, 1.0).path_class == PathClass::A2A);
}
