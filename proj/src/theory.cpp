#include "scdn/theory.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "scdn/errors.hpp"
#include "scdn/network_dynamics.hpp"

namespace scdn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double spectral_norm(const MatrixXd& w, uint64_t seed, int max_iter, double rel_tol) {
  if (w.size() == 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  VectorXd v(w.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = g(rng);
  if (v.norm() == 0.0) v.setOnes();
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    VectorXd u = w * v;
    const double un = u.norm();
    if (un == 0.0) return 0.0;
    VectorXd nv = w.transpose() * (u / un);
    const double s = nv.norm();
    if (s == 0.0) return 0.0;
    v = nv / s;
    const bool done = std::abs(s - sigma) <= rel_tol * s;
    sigma = s;
    if (done) break;
  }
  return sigma;
}

double estimate_smoothness(const DenseNet& net, uint64_t seed) {
  double prod = 1.0;
  for (size_t l = 0; l < net.layers.size(); ++l) prod *= spectral_norm(net.layers[l].W, mix_seed(seed, l));
  return prod * prod;
}

double block_smoothness(const TrainingState& state, int id, uint64_t seed) {
  const double dev = id == kServer ? 1.0 : std::sqrt(estimate_smoothness(state.blocks.at(id).net, seed));
  const double srv = std::sqrt(estimate_smoothness(state.server, mix_seed(seed, 0x5E)));
  return (dev * srv) * (dev * srv);
}

double effective_tau(double tau, double survival) { return tau * survival; }

double upsilon(const DeviceTheory& d) {
  const double den = d.tau_eff * d.eta * d.w_mean - 0.5 * d.tau_eff * d.eta * d.w_max;
  if (!(den > 1e-12)) throw Error(ErrorCode::NonPositiveDenominator, "convergence condition violated");
  return 1.0 / den;
}

double upsilon_shifted(const DeviceTheory& d, double eps_g) {
  const double den = d.tau_eff * d.eta * d.w_mean - 0.5 * d.tau_eff * d.eta * d.w_max + eps_g;
  if (!(den > 0.0)) throw Error(ErrorCode::NonPositiveDenominator, "shifted denominator not positive");
  return 1.0 / den;
}

double big_upsilon(const DeviceTheory& d, double L_global) {
  const double a = d.tau_eff * d.L;
  const double b = d.eta * d.w_max;
  const double c = d.tau_eff * d.eta * d.w_max;
  return a * a * b * b * b + L_global * c * c;
}

double xi_bracket(const DeviceTheory& d, const GlobalTheory& g) {
  return g.F0 / (static_cast<double>(g.R) * static_cast<double>(g.N)) +
         2.0 * (d.Q * d.Q + d.sigma * d.sigma) * big_upsilon(d, g.L);
}

double xi_bound(const DeviceTheory& d, const GlobalTheory& g, double gamma, double eps_g) {
  return gamma * upsilon_shifted(d, eps_g) * xi_bracket(d, g);
}

Prop1Constants proposition1_constants(double tau_g, double tau_max, double L_max, double eta_max, double w_max,
                                      double Q, double sigma) {
  Prop1Constants c;
  const double qs = Q * Q + sigma * sigma;
  const double tl = tau_max * L_max;
  const double ew = eta_max * w_max;
  c.C1 = 64.0 * tau_g * tl * tl * std::pow(ew, 4) * qs;
  c.C2 = 32.0 * std::pow(tl * ew, 2);
  c.C3 = 8.0 * std::pow((tau_g - tau_max) * ew, 2) * qs;
  return c;
}

double w_mean(const OptimizerSpec& spec, double tau) {
  switch (spec.variant) {
    case OptVariant::Standard: return 1.0;
    case OptVariant::Momentum: {
      const double r = spec.rho;
      return 1.0 / (1.0 - r) + (std::pow(r, tau + 1.0) - r) / (tau * (1.0 - r) * (1.0 - r));
    }
    case OptVariant::Proximal: {
      const double a = spec.lr * spec.mu;
      return (1.0 - std::pow(1.0 - a, tau)) / (a * tau);
    }
  }
  return 1.0;
}

double w_max(const OptimizerSpec& spec, double) {
  if (spec.variant == OptVariant::Momentum) return 1.0 / (1.0 - spec.rho);
  return 1.0;
}

double h_tau(double rho, double tau) { return std::pow(rho, tau + 1.0) + tau / 2.0 - rho - tau * rho / 2.0; }

double lambert_wm1(double x) {
  const double lim = -std::exp(-1.0);
  if (!(x >= lim && x < 0.0)) throw Error(ErrorCode::DomainError, "W_{-1} defined on [-1/e, 0)");
  // w e^w increases from -1/e to 0 as w decreases from -1 to -inf.
  double hi = -1.0, lo = -2.0;
  while (lo * std::exp(lo) < x) lo *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid * std::exp(mid) < x)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

double rho_threshold() { return std::exp(lambert_wm1(-0.5 / std::sqrt(std::exp(1.0))) + 0.5); }

ConditionReport check_conditions(const OptimizerSpec& spec, double tau) {
  ConditionReport r;
  if (spec.variant == OptVariant::Momentum) {
    r.rho_checked = true;
    r.rho_limit = rho_threshold();
    if (!(spec.rho > 0.0 && spec.rho < r.rho_limit)) {
      r.passed = false;
      r.detail = "momentum above threshold";
    }
  } else if (spec.variant == OptVariant::Proximal) {
    r.eta_checked = true;
    r.eta_limit = 1.0 / (2.0 * tau * spec.mu);
    if (!(spec.lr > 0.0 && spec.lr < r.eta_limit)) {
      r.passed = false;
      r.detail = "learning rate above proximal limit";
    }
  }
  return r;
}

GradStats estimate_grad_stats(const TrainingState& state, int id, int n_samples, uint64_t seed) {
  const int total = static_cast<int>(state.data->x_train.rows());
  const int batch = id == kServer ? state.server_batch : state.blocks.at(id).batch_size;
  std::vector<int> all(total);
  for (int i = 0; i < total; ++i) all[i] = i;
  const VectorXd full = partial_grad(state, id, all);
  double qmax = full.norm();
  double var = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const VectorXd g = partial_grad(state, id, sample_rows(total, batch, mix_seed(seed, 0x6A, s)));
    qmax = std::max(qmax, g.norm());
    var += (g - full).squaredNorm();
  }
  GradStats st;
  st.Q = kSafetyFactor * qmax;
  st.sigma = n_samples > 0 ? kSafetyFactor * std::sqrt(var / n_samples) : 0.0;
  return st;
}

double empirical_smoothness(const TrainingState& state, int id, int n_probes, double radius, uint64_t seed) {
  const DeviceBlock& blk = state.blocks.at(id);
  const int total = static_cast<int>(state.data->x_train.rows());
  const VectorXd theta = blk.net.params();
  DenseNet moved = blk.net;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  double best = 0.0;
  for (int k = 0; k < n_probes; ++k) {
    const auto rows = sample_rows(total, blk.batch_size, mix_seed(seed, 0x5B, k));
    const VectorXd g0 = partial_grad(state, id, rows);
    // Finite-difference power iteration on the minibatch Hessian.
    VectorXd d(theta.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = g(rng);
    for (int it = 0; it < 10; ++it) {
      d *= radius / d.norm();
      moved.set_params(theta + d);
      const VectorXd hd = partial_grad(state, id, rows, &moved) - g0;
      best = std::max(best, hd.norm() / radius);
      if (hd.norm() == 0.0) break;
      d = hd;
    }
  }
  return kSafetyFactor * best;
}

DriftCheck gradient_drift(const TrainingState& state, int id, int tau, int n_batches, int grad_samples, uint64_t seed) {
  const DeviceBlock& blk = state.blocks.at(id);
  const int total = static_cast<int>(state.data->x_train.rows());
  DenseNet work = blk.net;
  std::vector<VectorXd> thetas{blk.net.params()};
  auto grad = [&](const VectorXd& theta, int q) {
    work.set_params(theta);
    if (q > 0) thetas.push_back(theta);
    return partial_grad(state, id, sample_rows(total, blk.batch_size, mix_seed(seed, id + 1, q)), &work);
  };
  thetas.push_back(run_optimizer(blk.opt, blk.net.params(), tau, grad));

  DriftCheck out;
  DenseNet at0 = blk.net, atq = blk.net;
  for (size_t q = 1; q < thetas.size(); ++q) {
    atq.set_params(thetas[q]);
    double mean = 0.0;
    for (int b = 0; b < n_batches; ++b) {
      const auto rows = sample_rows(total, blk.batch_size, mix_seed(seed, 0xD1F7, q * n_batches + b));
      mean += (partial_grad(state, id, rows, &atq) - partial_grad(state, id, rows, &at0)).squaredNorm();
    }
    out.lhs = std::max(out.lhs, mean / n_batches);
  }
  const GradStats gs = estimate_grad_stats(state, id, grad_samples, seed);
  const double L = std::max(block_smoothness(state, id, seed), empirical_smoothness(state, id, 16, 0.1, seed));
  const double step = blk.opt.lr * L * w_max(blk.opt, tau);
  out.rhs = 4.0 * tau * (gs.Q * gs.Q + gs.sigma * gs.sigma) * step * step;
  return out;
}

}  // namespace scdn
