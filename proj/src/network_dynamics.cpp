#include "scdn/network_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "scdn/errors.hpp"

namespace scdn {

double weibull_pdf(double r, double k, double lambda) {
  if (r < 0.0) throw Error(ErrorCode::DomainError, "weibull_pdf needs r >= 0");
  if (!(k > 0.0) || !(lambda > 0.0)) throw Error(ErrorCode::DomainError, "weibull_pdf needs k, lambda > 0");
  const double t = r / lambda;
  if (t == 0.0) {
    if (k == 1.0) return 1.0 / lambda;
    return k < 1.0 ? INFINITY : 0.0;
  }
  return (k / lambda) * std::pow(t, k - 1.0) * std::exp(-std::pow(t, k));
}

double weibull_cdf(double r, double k, double lambda) {
  if (r <= 0.0) return 0.0;
  return -std::expm1(-std::pow(r / lambda, k));
}

double failure_bias(const FailureModel& fm, int round) {
  if (fm.fixed_bias >= 0.0) return std::clamp(fm.fixed_bias, 0.0, 1.0);
  const double a = std::max(0, round - fm.entry_round);
  const double lo = std::pow(a / fm.scale, fm.shape_k);
  const double hi = std::pow((a + 1.0) / fm.scale, fm.shape_k);
  // (F(a+1) - F(a)) / (1 - F(a)) = 1 - exp(H(a) - H(a+1))
  const double h = -std::expm1(lo - hi);
  return std::clamp(h, 0.0, 0.99);
}

double survival(const FailureModel& fm) {
  if (fm.entry_round <= 0) return 1.0;
  return std::exp(-std::pow(fm.entry_round / fm.scale, fm.shape_k));
}

uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b) {
  // splitmix64 finalizer over a running combination
  auto mix = [](uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

namespace {

std::vector<int> pick_features(const NetworkState& state, const ArrivalModel& arr, std::mt19937_64& rng) {
  const int d = arr.num_features;
  const int w = std::clamp(arr.slice_width, 1, std::max(1, d));
  std::vector<int> out;
  if (d <= 0) return out;
  int start = -1;
  if (!arr.overlap) {
    std::set<int> seen;
    for (int id : state.historical) {
      const auto& f = state.devices.at(id).features;
      seen.insert(f.begin(), f.end());
    }
    std::vector<int> starts;
    for (int s = 0; s + w <= d; ++s) {
      bool free = true;
      for (int j = s; j < s + w && free; ++j) free = !seen.count(j);
      if (free) starts.push_back(s);
    }
    if (!starts.empty()) {
      std::uniform_int_distribution<size_t> pick(0, starts.size() - 1);
      start = starts[pick(rng)];
    }
  }
  if (start < 0) {
    std::uniform_int_distribution<int> pick(0, d - w);
    start = pick(rng);
  }
  for (int j = start; j < start + w; ++j) out.push_back(j);
  return out;
}

}  // namespace

StepResult step_population(const NetworkState& state, const ArrivalModel& arrivals, uint64_t seed) {
  StepResult res;
  res.next = state;
  NetworkState& nx = res.next;
  nx.round = state.round + 1;

  std::mt19937_64 rng(mix_seed(seed, static_cast<uint64_t>(state.round), 0x5157));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  nx.active.clear();
  for (int id : state.active) {
    const double bias = failure_bias(state.devices.at(id).failure, state.round);
    if (unif(rng) < bias)
      res.exited.push_back(id);
    else
      nx.active.push_back(id);
  }

  int entries = 0;
  if (arrivals.rate > 0.0) {
    std::poisson_distribution<int> pois(arrivals.rate);
    entries = pois(rng);
  }
  for (int e = 0; e < entries; ++e) {
    DeviceSpec d = arrivals.prototype;
    d.id = nx.next_id++;
    const Region& g = arrivals.region;
    d.position.x = g.lo.x + (g.hi.x - g.lo.x) * unif(rng);
    d.position.y = g.lo.y + (g.hi.y - g.lo.y) * unif(rng);
    d.position.z = g.lo.z + (g.hi.z - g.lo.z) * unif(rng);
    d.features = pick_features(nx, arrivals, rng);
    d.failure = arrivals.prototype.failure;
    if (!arrivals.shape_choices.empty()) {
      std::uniform_int_distribution<size_t> pick(0, arrivals.shape_choices.size() - 1);
      d.failure.shape_k = arrivals.shape_choices[pick(rng)];
    }
    d.failure.scale = arrivals.scale;
    d.failure.entry_round = nx.round;
    nx.devices[d.id] = d;
    nx.active.push_back(d.id);
    nx.historical.push_back(d.id);
    res.entered.push_back(d.id);
  }
  std::sort(nx.active.begin(), nx.active.end());
  std::sort(nx.historical.begin(), nx.historical.end());
  return res;
}

}  // namespace scdn
