#include "scdn/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "scdn/errors.hpp"
#include "scdn/theory.hpp"

#ifndef SCDN_VERSION
#define SCDN_VERSION "0.1.0"
#endif

namespace scdn {

using nlohmann::json;

namespace {

template <class E>
struct EnumNames {
  std::vector<std::pair<E, const char*>> items;
  const char* name(E e) const {
    for (const auto& [v, n] : items)
      if (v == e) return n;
    return "?";
  }
  E parse(const std::string& s, const std::string& where) const {
    for (const auto& [v, n] : items)
      if (s == n) return v;
    throw Error(ErrorCode::ConfigError, where + ": unknown value '" + s + "'");
  }
};

const EnumNames<Method> kMethods{{{Method::Scdn, "scdn"},
                                  {Method::ScdnNoOpt, "scdn_no_opt"},
                                  {Method::MaxVfl, "max_vfl"},
                                  {Method::Zoc, "zoc"},
                                  {Method::ZocWithOpt, "zoc_with_opt"}}};
const EnumNames<PosePolicy> kPoses{{{PosePolicy::Center, "center"},
                                    {PosePolicy::Random, "random"},
                                    {PosePolicy::Origin, "origin"},
                                    {PosePolicy::Max, "max"},
                                    {PosePolicy::RandomEdge, "random_edge"}}};
const EnumNames<OptVariant> kVariants{
    {{OptVariant::Standard, "standard"}, {OptVariant::Momentum, "momentum"}, {OptVariant::Proximal, "proximal"}}};
const EnumNames<ImportanceScaling> kScalings{{{ImportanceScaling::Value, "value"}, {ImportanceScaling::Rank, "rank"}}};

// Reads fields that are present and rejects keys nobody asked for.
class JsonIn {
 public:
  JsonIn(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(ErrorCode::ConfigError, path_ + ": expected an object");
  }
  template <class T>
  void field(const char* key, T& v) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    read(j_.at(key), v, path_ + "." + key);
  }
  template <class F>
  void object(const char* key, F f) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    JsonIn sub(j_.at(key), path_ + "." + key);
    f(sub);
    sub.finish();
  }
  template <class T, class F>
  void list(const char* key, std::vector<T>& out, F f) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    const json& arr = j_.at(key);
    if (!arr.is_array()) throw Error(ErrorCode::ConfigError, path_ + "." + key + ": expected an array");
    out.clear();
    for (size_t i = 0; i < arr.size(); ++i) {
      T item{};
      JsonIn sub(arr[i], path_ + "." + key + "." + std::to_string(i));
      f(sub, item);
      sub.finish();
      out.push_back(std::move(item));
    }
  }
  template <class E>
  void enumeration(const char* key, E& v, const EnumNames<E>& names) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    std::string s;
    read(j_.at(key), s, path_ + "." + key);
    v = names.parse(s, path_ + "." + key);
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw Error(ErrorCode::ConfigError, path_ + ": unknown key '" + it.key() + "'");
  }

 private:
  template <class T>
  static void read(const json& j, T& v, const std::string& where) {
    try {
      if constexpr (std::is_same_v<T, Position3>) {
        if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::ConfigError, where + ": expected [x, y, z]");
        v = Position3{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
      } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, uint64_t>) {
        if (!j.is_number()) throw Error(ErrorCode::ConfigError, where + ": expected a number");
        const double d = j.get<double>();
        if (d != std::floor(d) || (std::is_same_v<T, uint64_t> && d < 0))
          throw Error(ErrorCode::ConfigError, where + ": expected an integer");
        v = j.is_number_unsigned() ? static_cast<T>(j.get<uint64_t>()) : static_cast<T>(j.get<int64_t>());
        if (j.is_number_float()) v = static_cast<T>(d);
      } else {
        v = j.get<T>();
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError, where + ": " + e.what());
    }
  }
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

class JsonOut {
 public:
  explicit JsonOut(json& j) : j_(j) { j_ = json::object(); }
  template <class T>
  void field(const char* key, T& v) {
    if constexpr (std::is_same_v<T, Position3>)
      j_[key] = json::array({v.x, v.y, v.z});
    else
      j_[key] = v;
  }
  template <class F>
  void object(const char* key, F f) {
    JsonOut sub(j_[key]);
    f(sub);
  }
  template <class T, class F>
  void list(const char* key, std::vector<T>& items, F f) {
    json arr = json::array();
    for (T& item : items) {
      json one;
      JsonOut sub(one);
      f(sub, item);
      arr.push_back(std::move(one));
    }
    j_[key] = std::move(arr);
  }
  template <class E>
  void enumeration(const char* key, E& v, const EnumNames<E>& names) {
    j_[key] = names.name(v);
  }

 private:
  json& j_;
};

template <class IO>
void visit_opt(IO& io, OptimizerSpec& o) {
  io.enumeration("variant", o.variant, kVariants);
  io.field("lr", o.lr);
  io.field("rho", o.rho);
  io.field("mu", o.mu);
  io.field("theory_safe", o.theory_safe);
}

template <class IO>
void visit_device(IO& io, DeviceSpec& d) {
  io.field("id", d.id);
  io.field("position", d.position);
  io.field("features", d.features);
  io.field("widths", d.widths);
  io.field("batch_size", d.batch_size);
  io.field("payload_bits", d.payload_bits);
  io.field("conn_count", d.conn_count);
  io.field("flops_per_cycle", d.flops_per_cycle);
  io.field("capacitance", d.capacitance);
  io.field("g_min", d.g_min);
  io.field("g_max", d.g_max);
  io.field("p_max", d.p_max);
  io.object("opt", [&](IO& s) { visit_opt(s, d.opt); });
  io.object("failure", [&](IO& s) {
    s.field("shape_k", d.failure.shape_k);
    s.field("scale", d.failure.scale);
    s.field("entry_round", d.failure.entry_round);
    s.field("fixed_bias", d.failure.fixed_bias);
  });
}

template <class IO>
void visit_path(IO& io, PathConfig& p) {
  io.field("alpha", p.alpha);
  io.field("psi", p.psi);
  io.field("beta", p.beta);
  io.field("eta_los_db", p.eta_los_db);
  io.field("eta_nlos_db", p.eta_nlos_db);
}

template <class IO>
void visit_config(IO& io, SimConfig& c) {
  io.field("rounds", c.rounds);
  io.field("total_iters", c.total_iters);
  io.field("tau_g", c.tau_g);
  io.field("t_max", c.t_max);
  io.enumeration("initial_pose", c.initial_pose, kPoses);
  io.enumeration("method", c.method, kMethods);
  io.field("seed", c.seed);
  io.field("gamma_max", c.gamma_max);
  io.enumeration("importance", c.importance, kScalings);
  io.field("grad_samples", c.grad_samples);
  io.field("record_timing", c.record_timing);
  io.object("weights", [&](IO& s) {
    ObjectiveWeights& w = c.weights;
    s.field("psi_g", w.psi_g);
    s.field("psi_r", w.psi_r);
    s.field("psi_p", w.psi_p);
    s.field("psi_s", w.psi_s);
    s.field("psi_hat", w.psi_hat);
    s.field("eps_g", w.eps_g);
    s.field("eps_m", w.eps_m);
    s.field("eps_pr", w.eps_pr);
  });
  io.object("channel", [&](IO& s) {
    s.field("noise_dbm_hz", c.channel.noise_dbm_hz);
    s.field("bandwidth", c.channel.bandwidth);
    s.field("carrier_freq", c.channel.carrier_freq);
    s.object("a2g", [&](IO& p) { visit_path(p, c.channel.a2g); });
    s.object("a2a", [&](IO& p) { visit_path(p, c.channel.a2a); });
  });
  io.object("server", [&](IO& s) {
    s.field("k_hover", c.server.k_hover);
    s.field("k_alt", c.server.k_alt);
    s.field("k_lat", c.server.k_lat);
    s.field("region", c.server.pose_max);
  });
  io.object("solver", [&](IO& s) {
    s.field("tol", c.solver.tol);
    s.field("max_iters", c.solver.max_iters);
    s.field("local_search", c.solver.local_search);
    s.field("mu_factor", c.solver.gp.mu_factor);
    s.field("tol_outer", c.solver.gp.tol_outer);
  });
  io.object("dataset", [&](IO& s) {
    DatasetConfig& d = c.dataset;
    s.field("source", d.source);
    s.field("path", d.path);
    s.field("task", d.task);
    s.field("rows_train", d.rows_train);
    s.field("rows_test", d.rows_test);
    s.field("num_features", d.num_features);
    s.field("num_classes", d.num_classes);
    s.field("separation", d.separation);
    s.field("test_fraction", d.test_fraction);
  });
  io.object("training", [&](IO& s) {
    s.field("server_hidden", c.training.server_hidden);
    s.field("server_batch", c.training.server_batch);
    s.field("emb_dim", c.training.emb_dim);
    s.object("server_opt", [&](IO& o) { visit_opt(o, c.training.server_opt); });
  });
  io.list("devices", c.devices, [](IO& s, DeviceSpec& d) { visit_device(s, d); });
  io.object("arrivals", [&](IO& s) {
    ArrivalConfig& a = c.arrivals;
    s.field("rate", a.rate);
    s.field("region_lo", a.region_lo);
    s.field("region_hi", a.region_hi);
    s.field("slice_width", a.slice_width);
    s.field("overlap", a.overlap);
    s.field("shape_choices", a.shape_choices);
    s.field("scale", a.scale);
    s.object("prototype", [&](IO& p) { visit_device(p, a.prototype); });
  });
}

bool optimizing(Method m) { return m == Method::Scdn || m == Method::ZocWithOpt; }
bool discards(Method m) { return m == Method::Zoc || m == Method::ZocWithOpt; }


}  // namespace

const char* method_name(Method m) { return kMethods.name(m); }
const char* pose_policy_name(PosePolicy p) { return kPoses.name(p); }

ChannelParams ChannelConfig::params() const {
  ChannelParams p;
  p.noise_dbm_hz = noise_dbm_hz;
  p.bandwidth = bandwidth;
  p.carrier_freq = carrier_freq;
  p.a2g = ChannelParams::path_from_db(a2g.alpha, a2g.psi, a2g.beta, a2g.eta_los_db, a2g.eta_nlos_db);
  p.a2a = ChannelParams::path_from_db(a2a.alpha, a2a.psi, a2a.beta, a2a.eta_los_db, a2a.eta_nlos_db);
  p.validate();
  return p;
}

int SimConfig::effective_rounds() const {
  return total_iters > 0 ? static_cast<int>(std::floor(total_iters / tau_g)) : rounds;
}

void SimConfig::validate() const {
  if (effective_rounds() < 1) throw Error(ErrorCode::ConfigError, "at least one round is required");
  if (!(tau_g >= 1.0)) throw Error(ErrorCode::ConfigError, "tau_g must be >= 1");
  if (!(t_max > 0.0)) throw Error(ErrorCode::ConfigError, "t_max must be positive");
  if (!(gamma_max >= 1.0)) throw Error(ErrorCode::ConfigError, "gamma_max must be >= 1");
  if (grad_samples < 0) throw Error(ErrorCode::ConfigError, "grad_samples must be >= 0");
  weights.validate();
  server.validate();
  channel.params();
  if (dataset.source != "blobs" && dataset.source != "csv")
    throw Error(ErrorCode::ConfigError, "dataset.source must be blobs or csv");
  if (dataset.task != "classification" && dataset.task != "regression")
    throw Error(ErrorCode::ConfigError, "dataset.task must be classification or regression");
  if (devices.empty()) throw Error(ErrorCode::ConfigError, "the device roster is empty");
  std::set<int> ids;
  for (const DeviceSpec& d : devices) {
    if (!ids.insert(d.id).second) throw Error(ErrorCode::ConfigError, "duplicate device id " + std::to_string(d.id));
    if (d.features.empty()) throw Error(ErrorCode::ConfigError, "device without features");
    const Position3& m = server.pose_max;
    if (d.position.x < 0 || d.position.y < 0 || d.position.z < 0 || d.position.x > m.x || d.position.y > m.y ||
        d.position.z > m.z)
      throw Error(ErrorCode::ConfigError, "device " + std::to_string(d.id) + " outside the region");
  }
  if (arrivals.rate < 0.0) throw Error(ErrorCode::ConfigError, "arrival rate must be non-negative");
}

SimConfig config_from_json(const json& j) {
  SimConfig c;
  JsonIn in(j, "config");
  visit_config(in, c);
  in.finish();
  c.validate();
  return c;
}

json config_to_json(const SimConfig& c) {
  json j;
  SimConfig copy = c;
  JsonOut out(j);
  visit_config(out, copy);
  return j;
}

SimConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot open config " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
  return config_from_json(j);
}

void set_dotted(json& j, const std::string& path, const json& value) {
  json* cur = &j;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw Error(ErrorCode::ConfigError, "empty parameter path");
  for (size_t i = 0; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    const bool last = i + 1 == parts.size();
    if (cur->is_array()) {
      size_t idx = 0;
      try {
        idx = std::stoul(p);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError, "bad index '" + p + "' in " + path);
      }
      if (idx >= cur->size()) throw Error(ErrorCode::ConfigError, "index out of range in " + path);
      cur = &(*cur)[idx];
    } else if (cur->is_object() || cur->is_null()) {
      cur = &(*cur)[p];
    } else {
      throw Error(ErrorCode::ConfigError, "cannot descend into " + path);
    }
    if (last) *cur = value;
  }
}

Position3 initial_pose(PosePolicy policy, const Position3& region, uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 0x9053));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (policy) {
    case PosePolicy::Center:
      return {region.x / 2.0, region.y / 2.0, region.z / 2.0};
    case PosePolicy::Origin:
      return {0.0, 0.0, 0.0};
    case PosePolicy::Max:
      return region;
    case PosePolicy::Random:
      return {region.x * u(rng), region.y * u(rng), region.z * u(rng)};
    case PosePolicy::RandomEdge: {
      const double t = u(rng);
      const int edge = static_cast<int>(std::floor(4.0 * u(rng))) % 4;
      const double z = region.z * u(rng);
      if (edge == 0) return {region.x * t, 0.0, z};
      if (edge == 1) return {region.x * t, region.y, z};
      if (edge == 2) return {0.0, region.y * t, z};
      return {region.x, region.y * t, z};
    }
  }
  return {};
}

// ---------------------------------------------------------------------------

namespace {

std::shared_ptr<const VerticalDataset> build_dataset(const DatasetConfig& d, uint64_t seed) {
  if (d.source == "csv") {
    const Task task = d.task == "regression" ? Task::Regression : Task::Classification;
    return std::make_shared<VerticalDataset>(load_csv(d.path, task, d.test_fraction, seed));
  }
  return std::make_shared<VerticalDataset>(
      make_blobs(d.rows_train, d.rows_test, d.num_features, d.num_classes, d.separation, mix_seed(seed, 0xDA7A)));
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// Smallest power meeting the deadline exactly on this link, nudged up by a
// relative 1e-9 so the rounded delay stays within t_max.
double deadline_power(const ChannelParams& channel, const LinkState& ls, double bits, double t_max) {
  const double snr = std::exp2(bits / (channel.bandwidth * t_max)) - 1.0;
  return snr * ls.path_loss * channel.noise_power() * (1.0 + 1e-9);
}

// Greedy decision: every listed device at full power, top clock and tau_g.
RoundDecision greedy_decision(const RoundSnapshot& snap, const std::vector<bool>& on) {
  RoundDecision d;
  d.pose = snap.prev_pose;
  for (size_t k = 0; k < snap.devices.size(); ++k) {
    const RoundDevice& dev = snap.devices[k];
    DeviceDecision dd;
    dd.id = dev.id;
    dd.cpu_freq = dev.g_max;
    if (on[k]) {
      dd.alpha = 1.0;
      dd.tau = snap.tau_g;
      dd.tx_power = dev.p_max;
    }
    d.devices.push_back(dd);
  }
  return d;
}

}  // namespace

RunResult run(const SimConfig& config) {
  config.validate();
  RunResult res;
  res.config = config;
  const uint64_t seed = config.seed;
  const int rounds = config.effective_rounds();
  const ChannelParams channel = config.channel.params();
  const Method method = config.method;

  auto data = build_dataset(config.dataset, seed);
  TrainingState ts = init_training(data, config.devices, config.training, mix_seed(seed, 0x7A1));
  res.initial_perf = performance(ts);

  NetworkState ns;
  for (const DeviceSpec& d : config.devices) {
    ns.devices[d.id] = d;
    ns.active.push_back(d.id);
    ns.historical.push_back(d.id);
    ns.next_id = std::max(ns.next_id, d.id + 1);
  }
  std::sort(ns.active.begin(), ns.active.end());
  std::sort(ns.historical.begin(), ns.historical.end());
  ns.server_pose = initial_pose(config.initial_pose, config.server.pose_max, seed);

  ArrivalModel arrivals;
  arrivals.rate = config.arrivals.rate;
  arrivals.region = Region{config.arrivals.region_lo, config.arrivals.region_hi};
  arrivals.prototype = config.arrivals.prototype;
  arrivals.num_features = data->num_features();
  arrivals.slice_width = config.arrivals.slice_width;
  arrivals.overlap = config.arrivals.overlap;
  arrivals.shape_choices = config.arrivals.shape_choices;
  arrivals.scale = config.arrivals.scale;

  const int server_tau = round_tau(config.tau_g);

  for (int r = 0; r < rounds; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const uint64_t rs = mix_seed(seed, 0x40D, static_cast<uint64_t>(r));
    const std::vector<int> active = ns.active;

    // (1) device parameters at the start of the round
    RoundSnapshot snap;
    snap.prev_pose = ns.server_pose;
    snap.tau_g = config.tau_g;
    snap.t_max = config.t_max;
    snap.channel = channel;
    snap.server = config.server;
    snap.global.L = estimate_smoothness(ts.server, rs);
    snap.global.F0 = global_loss(ts);
    snap.global.R = rounds;
    snap.global.N = std::max<int>(1, static_cast<int>(active.size()));
    for (int id : active) {
      const DeviceSpec& spec = ns.devices.at(id);
      DeviceTheory th;
      th.L = block_smoothness(ts, id, rs);
      const GradStats gs = estimate_grad_stats(ts, id, config.grad_samples, mix_seed(rs, static_cast<uint64_t>(id)));
      th.Q = gs.Q;
      th.sigma = gs.sigma;
      th.eta = spec.opt.lr;
      th.w_mean = w_mean(spec.opt, config.tau_g);
      th.w_max = w_max(spec.opt, config.tau_g);
      snap.devices.push_back(round_device(spec, th, survival(spec.failure), 1.0));
    }

    // (2) importance from embedding exclusion
    std::vector<double> gamma(active.size(), 1.0);
    if (optimizing(method) && !active.empty()) {
      gamma = scale_importance(exclusion_losses(ts, cached_embeddings(ts), active), 1.0, config.gamma_max,
                               config.importance);
      for (size_t k = 0; k < active.size(); ++k) snap.devices[k].gamma = gamma[k];
    }

    // (3) round decision
    RoundDecision dec;
    int solver_iters = 0;
    if (optimizing(method)) {
      dec = solve_round(snap, config.weights, config.solver);
      solver_iters = dec.gp_solves;
    } else {
      std::vector<bool> on(active.size(), true);
      if (method == Method::ScdnNoOpt) {
        for (size_t k = 0; k < active.size(); ++k) {
          const RoundDevice& dev = snap.devices[k];
          on[k] = !link_state(channel, snap.prev_pose, dev.position, dev.p_max, dev.payload_bits, snap.t_max).failed;
        }
      }
      dec = greedy_decision(snap, on);
      dec.terms = exact_terms(dec, snap, config.weights);
    }

    // (4) local training with rounded tau, link filtering and synchronization
    RoundMetrics m;
    m.round = r;
    m.active = static_cast<int>(active.size());
    std::vector<DevicePlan> plans;
    const DecisionEnergies en = decision_energies(dec, snap);
    for (size_t k = 0; k < active.size(); ++k) {
      const RoundDevice& dev = snap.devices[k];
      const DeviceDecision& dd = dec.devices[k];
      DeviceRecord rec;
      rec.round = r;
      rec.id = dev.id;
      rec.alpha = dd.alpha >= 0.5 ? 1.0 : 0.0;
      rec.tau = dd.tau;
      rec.tau_exec = rec.alpha > 0.0 ? round_tau(dd.tau) : 0;
      rec.tx_power = dd.tx_power;
      rec.cpu_freq = dd.cpu_freq;
      rec.gamma = gamma[k];
      if (rec.alpha > 0.0) {
        LinkState ls = link_state(channel, dec.pose, dev.position, dd.tx_power, dev.payload_bits, snap.t_max);
        // The Pade rate is optimistic at high SNR; raise power to the exact
        // deadline requirement when the budget allows.
        const double need = deadline_power(channel, ls, dev.payload_bits, snap.t_max);
        if (ls.failed && need <= dev.p_max) {
          rec.tx_power = need;
          ls = link_state(channel, dec.pose, dev.position, need, dev.payload_bits, snap.t_max);
        }
        rec.link_failed = ls.failed;
        rec.e_tx = dev.payload_bits * rec.tx_power / ls.rate;
      }
      rec.e_p = processing_energy(dev, rec.tau_exec, dd.cpu_freq);
      plans.push_back(DevicePlan{dev.id, rec.tau_exec, rec.alpha > 0.0, rec.link_failed});
      m.avg_tau += rec.tau_exec;
      m.avg_alpha += rec.alpha;
      m.avg_power += rec.tx_power;
      m.avg_cpu += rec.cpu_freq;
      m.e_tx += rec.e_tx;
      m.e_p += rec.e_p;
      m.devices.push_back(rec);
    }
    if (!active.empty()) {
      const double n = static_cast<double>(active.size());
      m.avg_tau /= n;
      m.avg_alpha /= n;
      m.avg_power /= n;
      m.avg_cpu /= n;
    }
    m.e_m = en.server;
    m.server = dec.pose;
    m.terms = dec.terms;
    m.solver_iters = solver_iters;
    synchronize(ts, plans, server_tau, rs);
    ns.server_pose = dec.pose;
    m.perf_before_exit = performance(ts);

    // (5) population update
    StepResult step = step_population(ns, arrivals, mix_seed(seed, 0xB0B, static_cast<uint64_t>(r)));
    for (int id : step.exited) {
      if (discards(method))
        on_exit_discard(ts, id);
      else
        on_exit(ts, id);
    }
    for (int id : step.entered) on_entry(ts, step.next.devices.at(id), mix_seed(seed, 0xE7, static_cast<uint64_t>(id)));
    ns = std::move(step.next);
    m.exited = step.exited;
    m.entered = step.entered;

    m.loss = global_loss(ts);
    m.perf = performance(ts);
    m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    res.rounds.push_back(std::move(m));
  }
  return res;
}

// ---------------------------------------------------------------------------

namespace {

std::string num(double v) {
  std::ostringstream o;
  o << std::setprecision(10) << v;
  return o.str();
}

}  // namespace

std::string metrics_csv(const RunResult& r, bool with_timing) {
  std::ostringstream o;
  o << "round,loss,perf,avg_tau,avg_alpha,avg_power_w,avg_cpu_hz,server_x,server_y,server_z,e_tx_j,e_p_j,e_m_j,"
       "obj_a,obj_b,obj_c,obj_d,solver_iters,wall_ms\n";
  for (const RoundMetrics& m : r.rounds) {
    o << m.round << ',' << num(m.loss) << ',' << num(m.perf) << ',' << num(m.avg_tau) << ',' << num(m.avg_alpha) << ','
      << num(m.avg_power) << ',' << num(m.avg_cpu) << ',' << num(m.server.x) << ',' << num(m.server.y) << ','
      << num(m.server.z) << ',' << num(m.e_tx) << ',' << num(m.e_p) << ',' << num(m.e_m) << ',' << num(m.terms.a)
      << ',' << num(m.terms.b) << ',' << num(m.terms.c) << ',' << num(m.terms.d) << ',' << m.solver_iters << ','
      << num(with_timing ? m.wall_ms : 0.0) << '\n';
  }
  return o.str();
}

std::string decisions_csv(const RunResult& r) {
  std::ostringstream o;
  o << "round,device,alpha,tau,tau_exec,power_w,cpu_hz,gamma,link_failed,e_tx_j,e_p_j\n";
  for (const RoundMetrics& m : r.rounds)
    for (const DeviceRecord& d : m.devices)
      o << d.round << ',' << d.id << ',' << num(d.alpha) << ',' << num(d.tau) << ',' << d.tau_exec << ','
        << num(d.tx_power) << ',' << num(d.cpu_freq) << ',' << num(d.gamma) << ',' << (d.link_failed ? 1 : 0) << ','
        << num(d.e_tx) << ',' << num(d.e_p) << '\n';
  return o.str();
}

std::string timing_csv(const RunResult& r) {
  std::ostringstream o;
  o << "round,wall_ms,solver_iters\n";
  for (const RoundMetrics& m : r.rounds) o << m.round << ',' << num(m.wall_ms) << ',' << m.solver_iters << '\n';
  return o.str();
}

json manifest(const RunResult& r) {
  json j;
  j["config"] = config_to_json(r.config);
  j["seed"] = r.config.seed;
  j["method"] = method_name(r.config.method);
  j["rounds"] = r.rounds.size();
  j["version"] = SCDN_VERSION;
  j["initial_perf"] = r.initial_perf;
  json events = json::array();
  for (const RoundMetrics& m : r.rounds)
    if (!m.exited.empty() || !m.entered.empty())
      events.push_back({{"round", m.round},
                        {"exited", m.exited},
                        {"entered", m.entered},
                        {"perf_before", m.perf_before_exit},
                        {"perf_after", m.perf}});
  j["population_events"] = events;
  return j;
}

void write_run(const RunResult& r, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
    if (!f) throw Error(ErrorCode::ConfigError, "cannot write " + name + " in " + dir);
    f << text;
  };
  put("metrics.csv", metrics_csv(r, r.config.record_timing));
  put("decisions.csv", decisions_csv(r));
  put("timing.csv", timing_csv(r));
  put("manifest.json", manifest(r).dump(2) + "\n");
}

// ---------------------------------------------------------------------------

std::vector<SweepRow> sweep(const json& config, const std::string& param, const std::vector<double>& values) {
  std::vector<SweepRow> rows;
  for (double v : values) {
    json j = config;
    set_dotted(j, param, v);
    const RunResult r = run(config_from_json(j));
    SweepRow row;
    row.value = v;
    const RoundMetrics& last = r.rounds.back();
    row.final_loss = last.loss;
    row.final_perf = last.perf;
    row.final_active = last.avg_alpha * last.active;
    row.final_z = last.server.z;
    Position3 prev = initial_pose(r.config.initial_pose, r.config.server.pose_max, r.config.seed);
    for (const RoundMetrics& m : r.rounds) {
      row.mean_active += m.avg_alpha * m.active / static_cast<double>(r.rounds.size());
      row.server_xy_shift += std::hypot(m.server.x - prev.x, m.server.y - prev.y);
      prev = m.server;
      row.e_tx += m.e_tx;
      row.e_p += m.e_p;
      row.e_m += m.e_m;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(const std::string& param, const std::vector<SweepRow>& rows) {
  std::ostringstream o;
  o << param << ",final_loss,final_perf,final_active,mean_active,server_xy_shift,final_z,e_tx_j,e_p_j,e_m_j\n";
  for (const SweepRow& r : rows)
    o << num(r.value) << ',' << num(r.final_loss) << ',' << num(r.final_perf) << ',' << num(r.final_active) << ','
      << num(r.mean_active) << ',' << num(r.server_xy_shift) << ',' << num(r.final_z) << ',' << num(r.e_tx) << ','
      << num(r.e_p) << ',' << num(r.e_m) << '\n';
  return o.str();
}

CompareRow summarize(const std::string& name, const std::vector<RunResult>& runs) {
  CompareRow row;
  row.name = name;
  std::vector<double> energy, iters, finals;
  for (const RunResult& r : runs) {
    finals.push_back(r.rounds.back().perf);
    for (const RoundMetrics& m : r.rounds) {
      energy.push_back(m.e_p);
      iters.push_back(m.avg_tau);
    }
  }
  row.final_perf = mean(finals);
  if (!energy.empty()) {
    row.avg_energy = mean(energy);
    row.min_energy = *std::min_element(energy.begin(), energy.end());
    row.max_energy = *std::max_element(energy.begin(), energy.end());
    row.std_energy = stddev(energy);
    row.avg_iters = mean(iters);
    row.min_iters = *std::min_element(iters.begin(), iters.end());
    row.max_iters = *std::max_element(iters.begin(), iters.end());
    row.std_iters = stddev(iters);
  }
  return row;
}

std::vector<CompareRow> compare(const std::vector<SimConfig>& configs, int num_seeds) {
  if (num_seeds < 1) throw Error(ErrorCode::ConfigError, "compare needs at least one seed");
  std::vector<CompareRow> rows;
  for (const SimConfig& c : configs) {
    std::vector<RunResult> runs;
    for (int s = 0; s < num_seeds; ++s) {
      SimConfig cs = c;
      cs.seed = c.seed + static_cast<uint64_t>(s);
      runs.push_back(run(cs));
    }
    rows.push_back(summarize(method_name(c.method), runs));
  }
  return rows;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream o;
  o << "method,final_perf,avg_energy_j,min_energy_j,max_energy_j,std_energy_j,avg_iters,min_iters,max_iters,std_iters\n";
  for (const CompareRow& r : rows)
    o << r.name << ',' << num(r.final_perf) << ',' << num(r.avg_energy) << ',' << num(r.min_energy) << ','
      << num(r.max_energy) << ',' << num(r.std_energy) << ',' << num(r.avg_iters) << ',' << num(r.min_iters) << ','
      << num(r.max_iters) << ',' << num(r.std_iters) << '\n';
  return o.str();
}

}  // namespace scdn
