#pragma once
// Per-round resource allocation: the signomial round problem, its
// GP-compatible inner approximation around an anchor, and the successive
// approximation loop with binary activation handling.

#include <string>
#include <utility>
#include <vector>

#include "scdn/device.hpp"
#include "scdn/gp_core.hpp"
#include "scdn/theory.hpp"

namespace scdn {

struct ObjectiveWeights {
  double psi_g = 1e-3;
  double psi_r = 1e3;
  double psi_p = 1e-9;
  double psi_s = 1e-4;
  double psi_hat = 1e-4;  // auxiliary-variable penalty
  double eps_g = 1e-6;
  double eps_m = 1e-3;
  double eps_pr = 1e-2;
  void validate() const;
};

struct ServerEnergyParams {
  double k_hover = 1.0;
  double k_alt = 1.0;
  double k_lat = 0.1;  // J per metre
  Position3 pose_max{100.0, 100.0, 100.0};
  void validate() const;
};

// Everything the server knows about one device when it solves a round.
struct RoundDevice {
  int id = 0;
  Position3 position;
  double payload_bits = 1e5;
  double conn_count = 1000.0;
  double flops_per_cycle = 4.0;
  double capacitance = 1e-28;
  double g_min = 1e8;
  double g_max = 2e9;
  double p_max = 0.2;
  int batch_size = 32;
  DeviceTheory theory;  // tau_eff is ignored; w_mean and w_max are taken at tau_g
  double survival = 1.0;
  double gamma = 1.0;
};

RoundDevice round_device(const DeviceSpec& spec, const DeviceTheory& theory, double survival, double gamma);

struct RoundSnapshot {
  std::vector<RoundDevice> devices;
  GlobalTheory global;
  Position3 prev_pose;
  double tau_g = 5.0;
  double t_max = 1e-3;
  ChannelParams channel = ChannelParams::defaults();
  ServerEnergyParams server;
};

enum class AlphaMode { Off, On, Relaxed };

struct DeviceDecision {
  int id = 0;
  double tx_power = 0.0;
  double cpu_freq = 0.0;
  double tau = 0.0;
  double alpha = 0.0;
  double chi_d = 0.0, chi_t = 0.0, chi_z = 0.0, chi_pr = 0.0, chi_pr_hat = 0.0, chi_los = 0.0, chi_nlos = 0.0;
};

struct ObjectiveTerms {
  double a = 0.0;  // weighted convergence bound
  double b = 0.0;  // weighted transmit energy
  double c = 0.0;  // weighted processing energy
  double d = 0.0;  // weighted server energy
  double total() const { return a + b + c + d; }
};

struct RoundDecision {
  std::vector<DeviceDecision> devices;
  Position3 pose;
  double altitude_power = 0.0;
  double chi_l = 0.0, chi_a = 0.0, chi_e = 0.0;
  ObjectiveTerms terms;           // evaluated with the exact physical formulas
  double objective = 0.0;         // surrogate objective with uncondensed denominators
  std::vector<double> trace;      // surrogate objective after each inner iteration
  std::vector<double> gap;        // condensed minus surrogate objective per iteration
  std::vector<double> violation;  // largest constraint violation per iteration
  int iterations = 0;             // inner iterations of the final activation pattern
  int gp_solves = 0;              // over every pattern tried
  bool converged = false;
};

struct SolveCriteria {
  double tol = 1e-4;
  int max_iters = 30;
  bool local_search = true;
  // Stop at the first non-improving iterate instead of accepting it.
  bool guard_monotone = true;
  SolveOptions gp;
};

// Transmit energy with the [2/1] Pade form of log(1+u) in the rate.
double pade_tx_energy(double bits, double tx_power, double noise, double eta_eff, double geometry, double bandwidth);

// Variable layout and constraint assembly for one activation pattern.
class RoundModel {
 public:
  RoundModel(RoundSnapshot snapshot, ObjectiveWeights weights, std::vector<AlphaMode> modes);

  const RoundSnapshot& snapshot() const { return snap_; }
  const std::vector<AlphaMode>& modes() const { return modes_; }
  int num_vars() const { return static_cast<int>(vars_.size()); }
  const std::vector<Variable>& variables() const { return vars_; }

  // Feasible-for-bounds start with every auxiliary set from the geometry.
  Point initial_point() const;
  // GP inner approximation at `anchor`. When `condensed` is non-null it
  // receives every (source posynomial, monomial) pair that was condensed.
  GpProblem build(const Point& anchor, std::vector<std::pair<Posynomial, Monomial>>* condensed = nullptr) const;
  // Round objective with auxiliary penalties and uncondensed denominators.
  double surrogate_objective(const Point& x) const;
  // Pade transmit delay over T^max for device k (0 for inactive devices).
  double timing_ratio(const Point& x, int k) const;
  RoundDecision decode(const Point& x) const;

 private:
  struct DevVars {
    int p = -1, g = -1, tau = -1, alpha = -1;
    int chi_d = -1, chi_z = -1, chi_pr_hat = -1, chi_pr = -1, chi_los = -1, chi_nlos = -1, chi_t = -1;
    bool elevated = false;
  };
  int add(const std::string& name, double lo, double hi);
  Posynomial xi_numerator(int k) const;
  Posynomial a_tilde(int k) const;
  Posynomial path_term(int k) const;  // sigma^2 * eta_eff * G
  Posynomial tx_numerator(int k) const;
  Posynomial t_tilde(int k) const;
  double xi_off(int k) const;
  double energy_coeff(int k) const;

  RoundSnapshot snap_;
  ObjectiveWeights w_;
  std::vector<AlphaMode> modes_;
  std::vector<Variable> vars_;
  std::vector<DevVars> dv_;
  int sx_ = -1, sy_ = -1, sz_ = -1, pa_ = -1, chi_l_ = -1, chi_a_ = -1, chi_e_ = -1;
};

struct InnerResult {
  bool feasible = false;
  Point x;
  double objective = 0.0;
  std::vector<double> trace, gap, violation;
  int iterations = 0;
  bool converged = false;
};

// Successive inner approximation for a fixed activation pattern.
InnerResult solve_inner(const RoundModel& model, const SolveCriteria& criteria);
InnerResult solve_inner(const RoundModel& model, const Point& init, const SolveCriteria& criteria);

// Relax, round, repair and 1-flip search over activations.
RoundDecision solve_round(const RoundSnapshot& snapshot, const ObjectiveWeights& weights,
                          const SolveCriteria& criteria = {});
// Exhaustive search over all activation patterns (small N only).
RoundDecision enumerate_round(const RoundSnapshot& snapshot, const ObjectiveWeights& weights,
                              const SolveCriteria& criteria = {});

struct DecisionEnergies {
  std::vector<double> tx;    // per device, J
  std::vector<double> proc;  // per device, J
  double server = 0.0;       // J
  double hover = 0.0, altitude = 0.0, lateral = 0.0;
};

DecisionEnergies decision_energies(const RoundDecision& decision, const RoundSnapshot& snapshot);
ObjectiveTerms exact_terms(const RoundDecision& decision, const RoundSnapshot& snapshot, const ObjectiveWeights& weights);
// Processing energy of tau iterations at clock g.
double processing_energy(const RoundDevice& d, double tau, double g);
// Exact altitude power needed to move from z_prev to z.
double altitude_power_needed(double z_prev, double z, double z_max);

}  // namespace scdn
