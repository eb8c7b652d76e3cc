#pragma once

// Node geometry and the air-to-ground / air-to-air channel.
// All quantities are linear SI units; dB values are converted once in
// ChannelParams::from_db.

namespace scdn {

struct Position3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

enum class PathClass { A2G, A2A };

struct PathParams {
  double alpha = 2.0;     // path-loss exponent
  double psi = 11.95;     // LoS fit constant
  double beta = 0.14;     // LoS fit constant, per degree
  double eta_los = 1.0;   // excess loss, linear
  double eta_nlos = 1.0;  // excess loss, linear
};

struct ChannelParams {
  double noise_dbm_hz = -174.0;
  double bandwidth = 2e6;
  double carrier_freq = 2e9;
  double light_speed = 299792458.0;
  PathParams a2g;
  PathParams a2a;

  // Defaults of the reference urban setting, excess losses given in dB.
  static ChannelParams defaults();
  static PathParams path_from_db(double alpha, double psi, double beta, double eta_los_db,
                                 double eta_nlos_db);

  const PathParams& path(PathClass c) const { return c == PathClass::A2A ? a2a : a2g; }
  // sigma^2 = N0 * B in watts.
  double noise_power() const;
  // 4 pi f / c
  double mu() const;
  void validate() const;
};

struct LinkState {
  PathClass path_class = PathClass::A2G;
  double p_los = 0.0;
  double path_loss = 0.0;
  double rate = 0.0;
  double delay = 0.0;
  bool failed = true;
};

double db_to_linear(double db);
double dbm_to_watts(double dbm);

double euclidean_distance(const Position3& a, const Position3& b);
double elevation_angle_deg(const Position3& server, const Position3& device);
PathClass path_class_for(const Position3& server, const Position3& device);
double p_los(const ChannelParams& params, PathClass c, double angle_deg);
double path_loss(const ChannelParams& params, PathClass c, double distance, double p_los);
double rate(const ChannelParams& params, double path_loss, double tx_power);
LinkState link_state(const ChannelParams& params, const Position3& server, const Position3& device,
                     double tx_power, double payload_bits, double t_max);

}  // namespace scdn
