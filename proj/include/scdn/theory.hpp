#pragma once

// Numerical evaluation of the convergence-bound quantities.

#include <cstdint>
#include <string>
#include <vector>

#include "scdn/vfl_engine.hpp"

namespace scdn {

struct DeviceTheory {
  double L = 0.0;        // block smoothness
  double Q = 0.0;        // gradient norm bound
  double sigma = 0.0;    // gradient noise bound
  double eta = 0.0;
  double w_mean = 1.0;
  double w_max = 1.0;
  double tau_eff = 0.0;
};

struct GlobalTheory {
  double L = 0.0;
  double F0 = 0.0;
  int R = 1;
  int N = 1;
};

double spectral_norm(const Eigen::MatrixXd& w, uint64_t seed = 1, int max_iter = 50, double rel_tol = 1e-8);
double estimate_smoothness(const DenseNet& net, uint64_t seed = 1);
// Smoothness of the loss with respect to one device block: the device path
// followed by the fusion network.
double block_smoothness(const TrainingState& state, int id, uint64_t seed = 1);

double effective_tau(double tau, double survival);
double upsilon(const DeviceTheory& d);
double upsilon_shifted(const DeviceTheory& d, double eps_g);
double big_upsilon(const DeviceTheory& d, double L_global);
double xi_bound(const DeviceTheory& d, const GlobalTheory& g, double gamma, double eps_g);
// Bracketed term of the stationarity bound without the leading reciprocal.
double xi_bracket(const DeviceTheory& d, const GlobalTheory& g);

struct Prop1Constants {
  double C1 = 0.0, C2 = 0.0, C3 = 0.0;
};
Prop1Constants proposition1_constants(double tau_g, double tau_max, double L_max, double eta_max, double w_max,
                                      double Q, double sigma);

// Mean and maximum of the per-iteration scale coefficient over tau steps.
// tau may be fractional; momentum uses the asymptotic bound 1/(1-rho) as max.
double w_mean(const OptimizerSpec& spec, double tau);
double w_max(const OptimizerSpec& spec, double tau);
double h_tau(double rho, double tau);
// exp(W_{-1}(-1/(2 sqrt e)) + 1/2)
double rho_threshold();
double lambert_wm1(double x);

struct ConditionReport {
  bool passed = true;
  bool rho_checked = false;
  bool eta_checked = false;
  double rho_limit = 0.0;
  double eta_limit = 0.0;
  std::string detail;
};
ConditionReport check_conditions(const OptimizerSpec& spec, double tau);

struct GradStats {
  double Q = 0.0;
  double sigma = 0.0;
};
constexpr double kSafetyFactor = 1.5;
GradStats estimate_grad_stats(const TrainingState& state, int id, int n_samples, uint64_t seed);

// Probe-based smoothness of one block: finite-difference power iteration
// on the minibatch Hessian with steps of norm `radius`, the largest ratio
// over `n_probes` minibatches, times the safety factor. Unlike the
// spectral-norm estimate it accounts for the input scale.
double empirical_smoothness(const TrainingState& state, int id, int n_probes, double radius, uint64_t seed);

// Empirical check of the in-round gradient drift bound for one device. The
// device runs tau local steps; at each step the mean squared change of the
// stochastic gradient over `n_batches` fresh minibatches (the same batch at
// both parameter values) is compared with 4 tau (Q^2 + sigma^2)(eta L w_max)^2.
struct DriftCheck {
  double lhs = 0.0;  // worst step
  double rhs = 0.0;
};
// L_n is the larger of the spectral-norm and probe-based estimates.
DriftCheck gradient_drift(const TrainingState& state, int id, int tau, int n_batches, int grad_samples, uint64_t seed);

}  // namespace scdn
