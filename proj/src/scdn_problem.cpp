#include "scdn/scdn_problem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>

#include "scdn/errors.hpp"

namespace scdn {

namespace {

constexpr double kPoseFloor = 1e-4;  // fraction of the axis limit
constexpr double kAuxLo = 1e-9;
constexpr double kAuxHi = 1e9;
constexpr double kTauLo = 1e-6;
constexpr double kAlphaLo = 1e-3;
constexpr double kPowerFloor = 1e-4;  // fraction of the power limit
constexpr double kMargin = 1e-3;
constexpr double kDeg = 180.0 / M_PI;

Monomial V(int id, double p = 1.0) { return Monomial::var(id, p); }
Monomial C(double c) { return Monomial::constant(c); }

double axis(const Position3& p, int j) { return j == 0 ? p.x : (j == 1 ? p.y : p.z); }

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

void ObjectiveWeights::validate() const {
  for (double v : {psi_g, psi_r, psi_p, psi_s})
    if (!finite_nonneg(v)) throw Error(ErrorCode::ConfigError, "objective weights must be finite and non-negative");
  for (double v : {psi_hat, eps_g, eps_m, eps_pr})
    if (!std::isfinite(v) || v <= 0.0) throw Error(ErrorCode::ConfigError, "penalty and epsilon weights must be positive");
}

void ServerEnergyParams::validate() const {
  for (double v : {k_hover, k_alt, k_lat, pose_max.x, pose_max.y, pose_max.z})
    if (!std::isfinite(v) || v <= 0.0) throw Error(ErrorCode::ConfigError, "server energy parameters must be positive");
}

RoundDevice round_device(const DeviceSpec& spec, const DeviceTheory& theory, double survival, double gamma) {
  RoundDevice d;
  d.id = spec.id;
  d.position = spec.position;
  d.payload_bits = spec.payload_bits;
  d.conn_count = spec.conn_count;
  d.flops_per_cycle = spec.flops_per_cycle;
  d.capacitance = spec.capacitance;
  d.g_min = spec.g_min;
  d.g_max = spec.g_max;
  d.p_max = spec.p_max;
  d.batch_size = spec.batch_size;
  d.theory = theory;
  d.survival = survival;
  d.gamma = gamma;
  return d;
}

double pade_tx_energy(double bits, double tx_power, double noise, double eta_eff, double geometry, double bandwidth) {
  const double a = noise * eta_eff * geometry;
  return 2.0 * bits * std::log(2.0) * a * (3.0 * a + 2.0 * tx_power) / (bandwidth * (6.0 * a + tx_power));
}

double processing_energy(const RoundDevice& d, double tau, double g) {
  return tau * 3.0 * d.conn_count * d.capacitance * d.batch_size / (2.0 * d.flops_per_cycle) * g * g;
}

double altitude_power_needed(double z_prev, double z, double z_max) {
  if (z >= z_max) return INFINITY;
  return std::max(0.0, std::log((z_max - z_prev) / (z_max - z)));
}

// ---------------------------------------------------------------------------

int RoundModel::add(const std::string& name, double lo, double hi) {
  vars_.push_back(Variable{name, lo, hi});
  return static_cast<int>(vars_.size()) - 1;
}

RoundModel::RoundModel(RoundSnapshot snapshot, ObjectiveWeights weights, std::vector<AlphaMode> modes)
    : snap_(std::move(snapshot)), w_(weights), modes_(std::move(modes)) {
  w_.validate();
  snap_.server.validate();
  snap_.channel.validate();
  if (modes_.size() != snap_.devices.size())
    throw Error(ErrorCode::ShapeMismatch, "one activation mode per device is required");
  if (!(snap_.tau_g >= 1.0) || !(snap_.t_max > 0.0))
    throw Error(ErrorCode::ConfigError, "tau_g must be >= 1 and t_max positive");

  dv_.resize(snap_.devices.size());
  for (size_t k = 0; k < snap_.devices.size(); ++k) {
    const RoundDevice& d = snap_.devices[k];
    const DeviceTheory& t = d.theory;
    if (t.eta * (t.w_mean - 0.5 * t.w_max) <= 0.0)
      throw Error(ErrorCode::DomainError, "device " + std::to_string(d.id) + " violates w_mean > w_max / 2");
    DevVars& v = dv_[k];
    v.elevated = d.position.z > 0.0;
    if (modes_[k] == AlphaMode::Off) continue;
    const std::string s = std::to_string(d.id);
    v.p = add("P_" + s, kPowerFloor * d.p_max, d.p_max);
    v.g = add("g_" + s, d.g_min, d.g_max);
    v.tau = add("tau_" + s, kTauLo, snap_.tau_g);
    if (modes_[k] == AlphaMode::Relaxed) {
      v.alpha = add("alpha_" + s, kAlphaLo, 1.0);
      v.chi_t = add("chiT_" + s, kAuxLo, kAuxHi);
    }
    v.chi_d = add("chiD_" + s, kAuxLo, kAuxHi);
    v.chi_z = add("chiz_" + s, kAuxLo, kAuxHi);
    v.chi_pr_hat = add("chiPrHat_" + s, kAuxLo, kAuxHi);
    v.chi_pr = add("chiPr_" + s, kAuxLo, kAuxHi);
    v.chi_los = add("chiLoS_" + s, kAuxLo, kAuxHi);
    v.chi_nlos = add("chiNLoS_" + s, kAuxLo, kAuxHi);
  }
  const Position3& m = snap_.server.pose_max;
  sx_ = add("phi_x", kPoseFloor * m.x, (1.0 - kPoseFloor) * m.x);
  sy_ = add("phi_y", kPoseFloor * m.y, (1.0 - kPoseFloor) * m.y);
  sz_ = add("phi_z", kPoseFloor * m.z, (1.0 - kPoseFloor) * m.z);
  pa_ = add("P_A", kAuxLo, kAuxHi);
  chi_l_ = add("chiL", kAuxLo, kAuxHi);
  chi_a_ = add("chiA", kAuxLo, kAuxHi);
  chi_e_ = add("chiE", kAuxLo, kAuxHi);
}

Posynomial RoundModel::xi_numerator(int k) const {
  const RoundDevice& d = snap_.devices[k];
  const DeviceTheory& t = d.theory;
  const GlobalTheory& g = snap_.global;
  const double c0 = g.F0 / (static_cast<double>(g.R) * g.N);
  const double p = d.survival;
  const double ew = t.eta * t.w_max;
  const double c2 = 2.0 * (t.Q * t.Q + t.sigma * t.sigma) * (p * p * t.L * t.L * ew * ew * ew + g.L * p * p * ew * ew);
  Posynomial out = Posynomial(C(d.gamma * c0));
  out.add(d.gamma * c2 * V(dv_[k].tau, 2.0));
  return out;
}

Posynomial RoundModel::a_tilde(int k) const {
  const RoundDevice& d = snap_.devices[k];
  const double coef = d.theory.eta * (d.theory.w_mean - 0.5 * d.theory.w_max) * d.survival;
  Posynomial out = Posynomial(coef * V(dv_[k].tau));
  out.add(C(w_.eps_g));
  return out;
}

double RoundModel::xi_off(int k) const {
  const RoundDevice& d = snap_.devices[k];
  const GlobalTheory& g = snap_.global;
  return d.gamma * g.F0 / (static_cast<double>(g.R) * g.N) / w_.eps_g;
}

Posynomial RoundModel::path_term(int k) const {
  const DevVars& v = dv_[k];
  const PathParams& pp = snap_.channel.path(v.elevated ? PathClass::A2A : PathClass::A2G);
  const double base = snap_.channel.noise_power() * std::pow(snap_.channel.mu(), pp.alpha);
  const Monomial geo = V(v.chi_d, pp.alpha / 2.0);
  Posynomial out = Posynomial(base * pp.eta_los * V(v.chi_los) * geo);
  out.add(base * pp.eta_nlos * V(v.chi_nlos) * geo);
  return out;
}

Posynomial RoundModel::tx_numerator(int k) const {
  const Posynomial a = path_term(k);
  const double m = 2.0 * snap_.devices[k].payload_bits * std::log(2.0);
  return m * (3.0 * (a * a) + 2.0 * (a * V(dv_[k].p)));
}

Posynomial RoundModel::t_tilde(int k) const {
  Posynomial out = 6.0 * path_term(k);
  out.add(V(dv_[k].p));
  return snap_.channel.bandwidth * out;
}

double RoundModel::energy_coeff(int k) const {
  return processing_energy(snap_.devices[k], 1.0, 1.0);
}

Point RoundModel::initial_point() const {
  Point x(vars_.size(), 1.0);
  auto clampv = [&](int id, double v) { return std::clamp(v, vars_[id].lo, vars_[id].hi); };
  const Position3& prev = snap_.prev_pose;
  x[sx_] = clampv(sx_, prev.x);
  x[sy_] = clampv(sy_, prev.y);
  // Descending is free, so start low to keep the hovering term well scaled.
  x[sz_] = clampv(sz_, std::min(prev.z, 1.0));
  const Position3 pose{x[sx_], x[sy_], x[sz_]};

  for (size_t k = 0; k < dv_.size(); ++k) {
    if (modes_[k] == AlphaMode::Off) continue;
    const RoundDevice& d = snap_.devices[k];
    const DevVars& v = dv_[k];
    const PathParams& pp = snap_.channel.path(v.elevated ? PathClass::A2A : PathClass::A2G);
    x[v.p] = d.p_max / 2.0;
    x[v.g] = 0.5 * (d.g_min + d.g_max);
    x[v.tau] = snap_.tau_g / 2.0;
    if (v.alpha >= 0) {
      x[v.alpha] = 1.0;
      x[v.chi_t] = kMargin * x[v.tau];
    }
    const double dist2 = std::pow(euclidean_distance(pose, d.position), 2);
    x[v.chi_d] = std::max(kAuxLo * 10.0, dist2 * (1.0 + kMargin));
    x[v.chi_z] = std::max(kAuxLo * 10.0, std::abs(pose.z - d.position.z) * (1.0 - kMargin));
    const double s = x[v.chi_z] / std::sqrt(x[v.chi_d]);
    const double theta = kDeg * (s + s * s * s / 6.0);
    const double base = 1.0 + pp.beta * pp.psi - pp.beta * theta;
    x[v.chi_pr] = std::max(kMargin, 1e-2 - base);
    x[v.chi_pr_hat] = x[v.chi_pr] + base;
    const double plos = 1.0 / (1.0 + pp.psi * x[v.chi_pr_hat]);
    x[v.chi_los] = plos * (1.0 + kMargin);
    x[v.chi_nlos] = (1.0 - plos) * (1.0 + kMargin);
  }
  const double dxy2 = std::pow(pose.x - prev.x, 2) + std::pow(pose.y - prev.y, 2);
  x[chi_l_] = std::max(1e-6, dxy2 * (1.0 + kMargin));
  const double zmax = snap_.server.pose_max.z;
  const double need = std::exp(altitude_power_needed(std::min(prev.z, zmax * (1.0 - kPoseFloor)), pose.z, zmax));
  x[chi_a_] = kMargin;
  x[pa_] = std::max(kMargin, need * (1.0 + kMargin) - 1.0 - x[chi_a_]);
  x[chi_e_] = x[chi_a_] + x[pa_] + 1.0;
  return x;
}

GpProblem RoundModel::build(const Point& anchor, std::vector<std::pair<Posynomial, Monomial>>* condensed) const {
  if (anchor.size() != vars_.size()) throw Error(ErrorCode::InfeasibleAnchor, "anchor has the wrong dimension");
  for (size_t i = 0; i < vars_.size(); ++i) {
    const double v = anchor[i];
    if (!std::isfinite(v) || v <= 0.0 || v < vars_[i].lo * (1.0 - 1e-9) || v > vars_[i].hi * (1.0 + 1e-9))
      throw Error(ErrorCode::InfeasibleAnchor, "anchor outside bounds for " + vars_[i].name);
  }
  auto cond = [&](const Posynomial& p) {
    Monomial m = condense(p, anchor);
    if (condensed) condensed->emplace_back(p, m);
    return m;
  };

  GpProblem g;
  g.vars = vars_;
  const Position3& prev = snap_.prev_pose;
  const ServerEnergyParams& se = snap_.server;
  const int pose_id[3] = {sx_, sy_, sz_};

  for (size_t ku = 0; ku < dv_.size(); ++ku) {
    const int k = static_cast<int>(ku);
    const RoundDevice& d = snap_.devices[ku];
    const DevVars& v = dv_[ku];
    if (modes_[ku] == AlphaMode::Off) {
      g.objective.add(C(w_.psi_g * xi_off(k)));
      continue;
    }
    const PathParams& pp = snap_.channel.path(v.elevated ? PathClass::A2A : PathClass::A2G);
    const Monomial alpha = v.alpha >= 0 ? V(v.alpha) : C(1.0);

    // (a) convergence bound over the condensed denominator
    g.objective.add((w_.psi_g * xi_numerator(k)) / cond(a_tilde(k)));
    // (b) Pade transmit energy over the condensed rate denominator
    const Monomial t_hat = cond(t_tilde(k));
    g.objective.add((w_.psi_r * tx_numerator(k)) * alpha / t_hat);
    // (c) processing energy
    g.objective.add(w_.psi_p * energy_coeff(k) * V(v.tau) * V(v.g, 2.0));
    // auxiliary penalties
    for (int id : {v.chi_d, v.chi_z, v.chi_pr, v.chi_los, v.chi_nlos}) g.objective.add(w_.psi_hat * V(id));
    if (v.chi_t >= 0) g.objective.add(w_.psi_hat * V(v.chi_t));

    // squared distance bound
    Posynomial dist_num;
    Posynomial dist_den = Posynomial(V(v.chi_d));
    double dev_norm2 = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double pn = axis(d.position, j);
      dist_num.add(V(pose_id[j], 2.0));
      dev_norm2 += pn * pn;
      if (pn > 0.0) dist_den.add(2.0 * pn * V(pose_id[j]));
    }
    if (dev_norm2 > 0.0) dist_num.add(C(dev_norm2));
    g.add_ineq(dist_num / cond(dist_den), "dist_" + std::to_string(d.id));

    // altitude gap proxy bounded by |dz| with the side fixed at the anchor
    if (anchor[sz_] >= d.position.z) {
      Posynomial num = Posynomial(V(v.chi_z));
      if (d.position.z > 0.0) num.add(C(d.position.z));
      g.add_ineq(num / V(sz_), "dz_" + std::to_string(d.id));
    } else {
      Posynomial num = Posynomial(V(v.chi_z));
      num.add(V(sz_));
      g.add_ineq((1.0 / d.position.z) * num, "dz_" + std::to_string(d.id));
    }

    // exponential of the truncated arcsin angle, split into two inequalities
    const double c1 = kDeg * pp.beta;
    const double c3 = kDeg * pp.beta / 6.0;
    const Monomial s1 = V(v.chi_z) * V(v.chi_d, -0.5);
    const Monomial s3 = V(v.chi_z, 3.0) * V(v.chi_d, -1.5);
    Posynomial angle = Posynomial(V(v.chi_pr_hat));
    angle.add(c1 * s1);
    angle.add(c3 * s3);
    Posynomial q_plus = angle;
    q_plus.add(C(w_.eps_pr));
    Posynomial pr_side = Posynomial(V(v.chi_pr));
    pr_side.add(C(pp.beta * pp.psi + 1.0));
    Posynomial q_minus = pr_side;
    q_minus.add(C(w_.eps_pr));
    g.add_ineq(pr_side / cond(q_plus), "pr_pos_" + std::to_string(d.id));
    g.add_ineq(angle / cond(q_minus), "pr_neg_" + std::to_string(d.id));

    // LoS and NLoS probability bounds
    Posynomial r_los = Posynomial(V(v.chi_los));
    r_los.add(pp.psi * V(v.chi_los) * V(v.chi_pr_hat));
    g.add_ineq(Posynomial(C(1.0)) / cond(r_los), "los_" + std::to_string(d.id));
    Posynomial r_nlos = Posynomial(V(v.chi_nlos));
    r_nlos.add(pp.psi * V(v.chi_nlos) * V(v.chi_pr_hat));
    g.add_ineq(Posynomial(pp.psi * V(v.chi_pr_hat)) / cond(r_nlos), "nlos_" + std::to_string(d.id));

    // transmit delay within T^max
    g.add_ineq((1.0 / snap_.t_max) * tx_numerator(k) * alpha / (V(v.p) * t_hat), "delay_" + std::to_string(d.id));

    // CPU clock must sustain tau iterations
    const double cpu = 3.0 * d.batch_size * d.conn_count / (4.0 * d.flops_per_cycle);
    g.add_ineq(Posynomial(cpu * V(v.tau) * V(v.g, -1.0)), "cpu_" + std::to_string(d.id));

    // tau (1 - alpha) <= chi_T
    if (v.alpha >= 0) {
      Posynomial x_tilde = Posynomial(V(v.chi_t));
      x_tilde.add(V(v.tau) * V(v.alpha));
      g.add_ineq(Posynomial(V(v.tau)) / cond(x_tilde), "select_" + std::to_string(d.id));
    }
  }

  // (d) server movement
  if (w_.psi_s > 0.0) g.objective_exp.push_back(ExpTerm{w_.psi_s * se.k_hover, sz_, 1.0});
  g.objective.add(w_.psi_s * se.k_alt * V(pa_));
  g.objective.add(w_.psi_s * se.k_lat * V(chi_l_, 0.5));
  g.objective.add(w_.psi_hat * V(chi_l_));
  g.objective.add(w_.psi_hat * V(chi_a_));

  Posynomial lat_num;
  Posynomial lat_den = Posynomial(V(chi_l_));
  double prev_norm2 = 0.0;
  for (int j = 0; j < 2; ++j) {
    const double pj = axis(prev, j);
    lat_num.add(V(pose_id[j], 2.0));
    prev_norm2 += pj * pj;
    if (pj > 0.0) lat_den.add(2.0 * pj * V(pose_id[j]));
  }
  if (prev_norm2 > 0.0) lat_num.add(C(prev_norm2));
  g.add_ineq(lat_num / cond(lat_den), "lateral");

  Posynomial e_minus = Posynomial(V(chi_e_));
  e_minus.add(C(w_.eps_m));
  Posynomial e_lhs = Posynomial(V(chi_a_));
  e_lhs.add(V(pa_));
  e_lhs.add(C(1.0));
  g.add_ineq(e_lhs / cond(e_minus), "alt_neg");
  Posynomial e_plus = Posynomial(V(chi_a_));
  e_plus.add(V(pa_));
  e_plus.add(C(1.0 + w_.eps_m));
  g.add_ineq(Posynomial(V(chi_e_)) / cond(e_plus), "alt_pos");
  const double zmax = se.pose_max.z;
  Posynomial o_tilde = Posynomial(zmax * V(chi_e_));
  if (prev.z > 0.0) o_tilde.add(C(prev.z));
  Posynomial o_num = Posynomial(C(zmax));
  o_num.add(V(chi_e_) * V(sz_));
  g.add_ineq(o_num / cond(o_tilde), "alt_climb");
  return g;
}

double RoundModel::surrogate_objective(const Point& x) const {
  double total = 0.0;
  for (size_t ku = 0; ku < dv_.size(); ++ku) {
    const int k = static_cast<int>(ku);
    const DevVars& v = dv_[ku];
    if (modes_[ku] == AlphaMode::Off) {
      total += w_.psi_g * xi_off(k);
      continue;
    }
    const double alpha = v.alpha >= 0 ? x[v.alpha] : 1.0;
    total += w_.psi_g * eval(xi_numerator(k), x) / eval(a_tilde(k), x);
    total += w_.psi_r * alpha * eval(tx_numerator(k), x) / eval(t_tilde(k), x);
    total += w_.psi_p * energy_coeff(k) * x[v.tau] * x[v.g] * x[v.g];
    double pen = x[v.chi_d] + x[v.chi_z] + x[v.chi_pr] + x[v.chi_los] + x[v.chi_nlos];
    if (v.chi_t >= 0) pen += x[v.chi_t];
    total += w_.psi_hat * pen;
  }
  const ServerEnergyParams& se = snap_.server;
  total += w_.psi_s * (se.k_hover * std::exp(x[sz_]) + se.k_alt * x[pa_] + se.k_lat * std::sqrt(x[chi_l_]));
  total += w_.psi_hat * (x[chi_l_] + x[chi_a_]);
  return total;
}

double RoundModel::timing_ratio(const Point& x, int k) const {
  if (modes_[k] == AlphaMode::Off) return 0.0;
  const DevVars& v = dv_[k];
  return eval(tx_numerator(k), x) / (x[v.p] * eval(t_tilde(k), x) * snap_.t_max);
}

RoundDecision RoundModel::decode(const Point& x) const {
  RoundDecision out;
  for (size_t k = 0; k < dv_.size(); ++k) {
    const DevVars& v = dv_[k];
    DeviceDecision dd;
    dd.id = snap_.devices[k].id;
    if (modes_[k] == AlphaMode::Off) {
      dd.cpu_freq = snap_.devices[k].g_min;
    } else {
      dd.tx_power = x[v.p];
      dd.cpu_freq = x[v.g];
      dd.tau = x[v.tau];
      dd.alpha = v.alpha >= 0 ? x[v.alpha] : 1.0;
      dd.chi_d = x[v.chi_d];
      dd.chi_z = x[v.chi_z];
      dd.chi_pr = x[v.chi_pr];
      dd.chi_pr_hat = x[v.chi_pr_hat];
      dd.chi_los = x[v.chi_los];
      dd.chi_nlos = x[v.chi_nlos];
      if (v.chi_t >= 0) dd.chi_t = x[v.chi_t];
    }
    out.devices.push_back(dd);
  }
  out.pose = Position3{x[sx_], x[sy_], x[sz_]};
  out.altitude_power = x[pa_];
  out.chi_l = x[chi_l_];
  out.chi_a = x[chi_a_];
  out.chi_e = x[chi_e_];
  out.objective = surrogate_objective(x);
  out.terms = exact_terms(out, snap_, w_);
  return out;
}

// ---------------------------------------------------------------------------

InnerResult solve_inner(const RoundModel& model, const SolveCriteria& criteria) {
  return solve_inner(model, model.initial_point(), criteria);
}

InnerResult solve_inner(const RoundModel& model, const Point& init, const SolveCriteria& criteria) {
  InnerResult r;
  Point x = init;
  double prev = 0.0;
  for (int b = 1; b <= criteria.max_iters; ++b) {
    const GpProblem gp = model.build(x);
    SolveReport rep;
    try {
      rep = solve(gp, x, criteria.gp);
    } catch (const Error&) {
      break;
    }
    if (!rep.converged) break;
    const double obj = model.surrogate_objective(rep.x);
    // Guard against solver tolerance undoing the monotone descent.
    if (criteria.guard_monotone && b > 1 && obj > prev + 1e-9 * std::abs(prev)) {
      r.converged = true;
      break;
    }
    r.feasible = true;
    r.trace.push_back(obj);
    r.gap.push_back(gp.objective_value(rep.x) - obj);
    r.violation.push_back(rep.max_violation);
    r.iterations = b;
    x = rep.x;
    if (b > 1 && std::abs(obj - prev) <= criteria.tol * std::abs(prev)) {
      prev = obj;
      r.converged = true;
      break;
    }
    prev = obj;
  }
  r.x = x;
  r.objective = r.feasible ? prev : INFINITY;
  return r;
}

namespace {

std::vector<AlphaMode> to_modes(const std::vector<bool>& on) {
  std::vector<AlphaMode> m;
  for (bool b : on) m.push_back(b ? AlphaMode::On : AlphaMode::Off);
  return m;
}

struct PatternCache {
  const RoundSnapshot& snap;
  const ObjectiveWeights& w;
  const SolveCriteria& crit;
  std::map<std::vector<bool>, InnerResult> done;
  int gp_solves = 0;

  const InnerResult& get(const std::vector<bool>& on) {
    auto it = done.find(on);
    if (it != done.end()) return it->second;
    RoundModel model(snap, w, to_modes(on));
    InnerResult r = solve_inner(model, crit);
    gp_solves += std::max(1, r.iterations);
    return done.emplace(on, std::move(r)).first->second;
  }
};

RoundDecision finish(const RoundSnapshot& snap, const ObjectiveWeights& w, const std::vector<bool>& on,
                     const InnerResult& r, int gp_solves) {
  RoundModel model(snap, w, to_modes(on));
  RoundDecision dec = model.decode(r.x);
  dec.trace = r.trace;
  dec.gap = r.gap;
  dec.violation = r.violation;
  dec.iterations = r.iterations;
  dec.gp_solves = gp_solves;
  dec.converged = r.converged;
  return dec;
}

}  // namespace

RoundDecision solve_round(const RoundSnapshot& snapshot, const ObjectiveWeights& weights, const SolveCriteria& criteria) {
  const size_t n = snapshot.devices.size();
  PatternCache cache{snapshot, weights, criteria, {}, 0};

  // continuous relaxation of the activations
  RoundModel relaxed(snapshot, weights, std::vector<AlphaMode>(n, AlphaMode::Relaxed));
  const InnerResult rel = solve_inner(relaxed, criteria);
  cache.gp_solves += std::max(1, rel.iterations);
  const Point& ref = rel.feasible ? rel.x : relaxed.initial_point();
  std::vector<bool> on(n, true);
  std::vector<double> alpha_val(n, 1.0);
  {
    const RoundDecision rd = relaxed.decode(ref);
    for (size_t k = 0; k < n; ++k) {
      alpha_val[k] = rd.devices[k].alpha;
      on[k] = !rel.feasible || alpha_val[k] >= 0.5;
    }
  }

  // repair: drop the device with the worst delay slack until feasible
  while (!cache.get(on).feasible) {
    int worst = -1;
    double worst_ratio = -1.0;
    for (size_t k = 0; k < n; ++k) {
      if (!on[k]) continue;
      const double ratio = relaxed.timing_ratio(ref, static_cast<int>(k));
      if (ratio > worst_ratio) {
        worst_ratio = ratio;
        worst = static_cast<int>(k);
      }
    }
    if (worst < 0) throw Error(ErrorCode::NoFeasibleActivation, "no activation pattern admits a feasible round");
    on[worst] = false;
  }

  // 1-flip local search on the rounded pattern
  if (criteria.local_search) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (size_t k = 0; k < n; ++k) {
        std::vector<bool> trial = on;
        trial[k] = !trial[k];
        const InnerResult& t = cache.get(trial);
        const double best = cache.get(on).objective;
        if (t.feasible && t.objective < best - 1e-12 * std::abs(best)) {
          on = trial;
          improved = true;
        }
      }
    }
  }
  return finish(snapshot, weights, on, cache.get(on), cache.gp_solves);
}

RoundDecision enumerate_round(const RoundSnapshot& snapshot, const ObjectiveWeights& weights,
                              const SolveCriteria& criteria) {
  const size_t n = snapshot.devices.size();
  if (n > 12) throw Error(ErrorCode::ConfigError, "enumeration is limited to 12 devices");
  PatternCache cache{snapshot, weights, criteria, {}, 0};
  std::vector<bool> best_on;
  double best = INFINITY;
  for (uint64_t mask = 0; mask < (uint64_t{1} << n); ++mask) {
    std::vector<bool> on(n);
    for (size_t k = 0; k < n; ++k) on[k] = (mask >> k) & 1U;
    const InnerResult& r = cache.get(on);
    if (r.feasible && r.objective < best) {
      best = r.objective;
      best_on = on;
    }
  }
  if (best_on.empty()) throw Error(ErrorCode::NoFeasibleActivation, "no activation pattern admits a feasible round");
  return finish(snapshot, weights, best_on, cache.get(best_on), cache.gp_solves);
}

// ---------------------------------------------------------------------------

DecisionEnergies decision_energies(const RoundDecision& decision, const RoundSnapshot& snapshot) {
  if (decision.devices.size() != snapshot.devices.size())
    throw Error(ErrorCode::ShapeMismatch, "decision and snapshot disagree on the device list");
  DecisionEnergies e;
  for (size_t k = 0; k < snapshot.devices.size(); ++k) {
    const RoundDevice& d = snapshot.devices[k];
    const DeviceDecision& dd = decision.devices[k];
    double tx = 0.0;
    if (dd.alpha > 0.0 && dd.tx_power > 0.0) {
      const LinkState ls = link_state(snapshot.channel, decision.pose, d.position, dd.tx_power, d.payload_bits,
                                      snapshot.t_max);
      tx = dd.alpha * d.payload_bits * dd.tx_power / ls.rate;
    }
    e.tx.push_back(tx);
    e.proc.push_back(processing_energy(d, dd.tau, dd.cpu_freq));
  }
  const ServerEnergyParams& se = snapshot.server;
  const Position3& p = decision.pose;
  const Position3& q = snapshot.prev_pose;
  e.hover = se.k_hover * std::exp(p.z);
  e.altitude = se.k_alt * altitude_power_needed(q.z, p.z, se.pose_max.z);
  e.lateral = se.k_lat * std::hypot(p.x - q.x, p.y - q.y);
  e.server = e.hover + e.altitude + e.lateral;
  return e;
}

ObjectiveTerms exact_terms(const RoundDecision& decision, const RoundSnapshot& snapshot, const ObjectiveWeights& w) {
  const DecisionEnergies e = decision_energies(decision, snapshot);
  ObjectiveTerms t;
  for (size_t k = 0; k < snapshot.devices.size(); ++k) {
    const RoundDevice& d = snapshot.devices[k];
    DeviceTheory th = d.theory;
    th.tau_eff = effective_tau(decision.devices[k].tau, d.survival);
    t.a += w.psi_g * xi_bound(th, snapshot.global, d.gamma, w.eps_g);
    t.b += w.psi_r * e.tx[k];
    t.c += w.psi_p * e.proc[k];
  }
  t.d = w.psi_s * e.server;
  return t;
}

}  // namespace scdn
