#pragma once
// End-to-end orchestration: configuration, the per-round loop with its
// baselines, parameter sweeps, method comparison and metrics files.

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "scdn/importance.hpp"
#include "scdn/network_dynamics.hpp"
#include "scdn/scdn_problem.hpp"
#include "scdn/vfl_engine.hpp"

namespace scdn {

enum class Method { Scdn, ScdnNoOpt, MaxVfl, Zoc, ZocWithOpt };
enum class PosePolicy { Center, Random, Origin, Max, RandomEdge };

const char* method_name(Method m);
const char* pose_policy_name(PosePolicy p);

struct PathConfig {
  double alpha = 2.0;
  double psi = 11.95;
  double beta = 0.14;
  double eta_los_db = 3.0;
  double eta_nlos_db = 23.0;
};

struct ChannelConfig {
  double noise_dbm_hz = -174.0;
  double bandwidth = 2e6;
  double carrier_freq = 2e9;
  PathConfig a2g;
  PathConfig a2a{2.2, 10.5, 0.12, 3.0, 17.0};
  ChannelParams params() const;
};

struct DatasetConfig {
  std::string source = "blobs";  // blobs or csv
  std::string path;              // csv only
  std::string task = "classification";
  int rows_train = 300;
  int rows_test = 150;
  int num_features = 8;
  int num_classes = 3;
  double separation = 1.5;
  double test_fraction = 0.3;
};

struct ArrivalConfig {
  double rate = 0.0;  // lambda_p, expected entries per round
  Position3 region_lo{0.0, 0.0, 0.0};
  Position3 region_hi{100.0, 100.0, 0.0};
  int slice_width = 2;
  bool overlap = true;
  std::vector<double> shape_choices{0.5, 1.0, 2.0};
  double scale = 1.0;  // Weibull scale for entrants
  DeviceSpec prototype;
};

struct SimConfig {
  int rounds = 30;
  int total_iters = 0;  // when positive, rounds = floor(total_iters / tau_g)
  double tau_g = 5.0;
  double t_max = 1e-3;
  PosePolicy initial_pose = PosePolicy::Center;
  Method method = Method::Scdn;
  uint64_t seed = 1;
  double gamma_max = 2.0;
  ImportanceScaling importance = ImportanceScaling::Value;
  int grad_samples = 4;
  bool record_timing = false;
  ObjectiveWeights weights;
  ChannelConfig channel;
  ServerEnergyParams server;  // pose_max doubles as the region bounds
  SolveCriteria solver;
  DatasetConfig dataset;
  TrainingSetup training;
  std::vector<DeviceSpec> devices;
  ArrivalConfig arrivals;

  int effective_rounds() const;
  void validate() const;
};

// Parses a config object; unknown keys raise ConfigError.
SimConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SimConfig& c);
SimConfig load_config(const std::string& path);
// Sets the value at a dotted path ("weights.psi_s", "devices.0.p_max").
void set_dotted(nlohmann::json& j, const std::string& path, const nlohmann::json& value);

Position3 initial_pose(PosePolicy policy, const Position3& region, uint64_t seed);

struct DeviceRecord {
  int round = 0;
  int id = 0;
  double alpha = 0.0;
  double tau = 0.0;  // decided, possibly fractional
  int tau_exec = 0;  // iterations actually run
  double tx_power = 0.0;
  double cpu_freq = 0.0;
  double gamma = 1.0;
  bool link_failed = false;
  double e_tx = 0.0;
  double e_p = 0.0;
};

struct RoundMetrics {
  int round = 0;
  double loss = 0.0;
  double perf = 0.0;
  double perf_before_exit = 0.0;  // after synchronization, before population changes
  double avg_tau = 0.0;
  double avg_alpha = 0.0;
  double avg_power = 0.0;
  double avg_cpu = 0.0;
  Position3 server;
  double e_tx = 0.0;
  double e_p = 0.0;
  double e_m = 0.0;
  ObjectiveTerms terms;
  int solver_iters = 0;
  double wall_ms = 0.0;
  int active = 0;
  std::vector<int> exited;
  std::vector<int> entered;
  std::vector<DeviceRecord> devices;
};

struct RunResult {
  SimConfig config;
  double initial_perf = 0.0;
  std::vector<RoundMetrics> rounds;
};

RunResult run(const SimConfig& config);

std::string metrics_csv(const RunResult& r, bool with_timing);
std::string decisions_csv(const RunResult& r);
std::string timing_csv(const RunResult& r);
nlohmann::json manifest(const RunResult& r);
// Writes metrics.csv, decisions.csv, timing.csv and manifest.json.
void write_run(const RunResult& r, const std::string& dir);

struct SweepRow {
  double value = 0.0;
  double final_loss = 0.0;
  double final_perf = 0.0;
  double final_active = 0.0;
  double mean_active = 0.0;
  double server_xy_shift = 0.0;  // summed lateral movement
  double final_z = 0.0;
  double e_tx = 0.0, e_p = 0.0, e_m = 0.0;
};

std::vector<SweepRow> sweep(const nlohmann::json& config, const std::string& param, const std::vector<double>& values);
std::string sweep_csv(const std::string& param, const std::vector<SweepRow>& rows);

struct CompareRow {
  std::string name;
  double final_perf = 0.0;
  double avg_energy = 0.0, min_energy = 0.0, max_energy = 0.0, std_energy = 0.0;  // per-round processing J
  double avg_iters = 0.0, min_iters = 0.0, max_iters = 0.0, std_iters = 0.0;     // per-round mean tau
};

CompareRow summarize(const std::string& name, const std::vector<RunResult>& runs);
// One row per config, each averaged over `num_seeds` seeds from its own seed.
std::vector<CompareRow> compare(const std::vector<SimConfig>& configs, int num_seeds = 1);
std::string compare_csv(const std::vector<CompareRow>& rows);

}  // namespace scdn
