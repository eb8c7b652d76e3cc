#pragma once

#include <vector>

#include "scdn/geometry_channel.hpp"

namespace scdn {

enum class OptVariant { Standard, Momentum, Proximal };

struct OptimizerSpec {
  OptVariant variant = OptVariant::Standard;
  double lr = 0.1;
  double rho = 0.2;  // momentum only
  double mu = 0.1;   // proximal only
  bool theory_safe = false;
};

struct FailureModel {
  double shape_k = 1.0;
  double scale = 1.0;
  int entry_round = 0;
  // When >= 0 the per-round exit probability is pinned to this value.
  double fixed_bias = -1.0;
};

struct DeviceSpec {
  int id = 0;
  Position3 position;
  std::vector<int> features;
  std::vector<int> widths;  // hidden widths followed by the embedding width
  int batch_size = 32;
  double payload_bits = 1e5;
  double conn_count = 1000.0;   // total connections of the local model
  double flops_per_cycle = 4.0;
  double capacitance = 1e-28;
  double g_min = 1e8;
  double g_max = 2e9;
  double p_max = 0.2;  // W
  OptimizerSpec opt;
  FailureModel failure;
};

}  // namespace scdn
