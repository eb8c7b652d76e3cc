#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "scdn/device.hpp"

namespace scdn {

struct Region {
  Position3 lo;
  Position3 hi;
};

struct ArrivalModel {
  double rate = 0.0;  // expected entries per round
  Region region;
  DeviceSpec prototype;  // hardware and model template for new devices
  int num_features = 0;
  int slice_width = 1;
  bool overlap = true;  // new devices may reuse columns already seen
  std::vector<double> shape_choices{0.5, 1.0, 2.0};
  double scale = 1.0;
};

struct NetworkState {
  int round = 0;
  std::vector<int> active;      // sorted ids
  std::vector<int> historical;  // sorted ids
  std::map<int, DeviceSpec> devices;
  Position3 server_pose;
  int next_id = 0;
};

struct StepResult {
  NetworkState next;
  std::vector<int> exited;
  std::vector<int> entered;
};

double weibull_pdf(double r, double k, double lambda);
double weibull_cdf(double r, double k, double lambda);
// Per-round exit probability at the device's age in `round`.
double failure_bias(const FailureModel& fm, int round);
// Survival weight used for the effective iteration count.
double survival(const FailureModel& fm);

// Deterministic per-seed random stream derivation.
uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b = 0);

StepResult step_population(const NetworkState& state, const ArrivalModel& arrivals, uint64_t seed);

}  // namespace scdn
