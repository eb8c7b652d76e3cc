#include "scdn/geometry_channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "scdn/errors.hpp"

namespace scdn {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

PathParams ChannelParams::path_from_db(double alpha, double psi, double beta, double eta_los_db,
                                       double eta_nlos_db) {
  PathParams p;
  p.alpha = alpha;
  p.psi = psi;
  p.beta = beta;
  p.eta_los = db_to_linear(eta_los_db);
  p.eta_nlos = db_to_linear(eta_nlos_db);
  return p;
}

ChannelParams ChannelParams::defaults() {
  ChannelParams c;
  c.a2g = path_from_db(2.0, 11.95, 0.14, 3.0, 23.0);
  c.a2a = path_from_db(2.2, 10.5, 0.12, 3.0, 17.0);
  return c;
}

double ChannelParams::noise_power() const { return dbm_to_watts(noise_dbm_hz) * bandwidth; }

double ChannelParams::mu() const { return 4.0 * std::numbers::pi * carrier_freq / light_speed; }

void ChannelParams::validate() const {
  auto check = [](const PathParams& p) {
    if (!(p.alpha > 0.0) || !(p.eta_los >= 1.0) || !(p.eta_nlos >= p.eta_los))
      throw Error(ErrorCode::ConfigError, "path params need alpha > 0 and eta_nlos >= eta_los >= 1");
  };
  check(a2g);
  check(a2a);
  if (!(bandwidth > 0.0) || !(carrier_freq > 0.0) || !(light_speed > 0.0))
    throw Error(ErrorCode::ConfigError, "bandwidth, carrier and light speed must be positive");
}

double euclidean_distance(const Position3& a, const Position3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double elevation_angle_deg(const Position3& server, const Position3& device) {
  const double d = euclidean_distance(server, device);
  if (d == 0.0) throw Error(ErrorCode::ZeroDistance, "elevation angle of co-located nodes");
  const double s = std::min(1.0, std::abs(server.z - device.z) / d);
  return 180.0 / std::numbers::pi * std::asin(s);
}

PathClass path_class_for(const Position3& server, const Position3& device) {
  return (device.z > 0.0 && server.z > 0.0) ? PathClass::A2A : PathClass::A2G;
}

double p_los(const ChannelParams& params, PathClass c, double angle_deg) {
  const PathParams& p = params.path(c);
  return 1.0 / (1.0 + p.psi * std::exp(-p.beta * (angle_deg - p.psi)));
}

double path_loss(const ChannelParams& params, PathClass c, double distance, double plos) {
  if (!(distance > 0.0)) throw Error(ErrorCode::ZeroDistance, "path loss at zero distance");
  const PathParams& p = params.path(c);
  return std::pow(params.mu() * distance, p.alpha) *
         (plos * p.eta_los + (1.0 - plos) * p.eta_nlos);
}

double rate(const ChannelParams& params, double pl, double tx_power) {
  if (tx_power <= 0.0) return 0.0;
  return params.bandwidth * std::log2(1.0 + tx_power / pl / params.noise_power());
}

LinkState link_state(const ChannelParams& params, const Position3& server, const Position3& device,
                     double tx_power, double payload_bits, double t_max) {
  LinkState s;
  s.path_class = path_class_for(server, device);
  const double d = euclidean_distance(server, device);
  s.p_los = p_los(params, s.path_class, elevation_angle_deg(server, device));
  s.path_loss = path_loss(params, s.path_class, d, s.p_los);
  s.rate = rate(params, s.path_loss, tx_power);
  s.delay = s.rate > 0.0 ? payload_bits / s.rate : std::numeric_limits<double>::infinity();
  s.failed = s.delay > t_max;
  return s;
}

}  // namespace scdn
