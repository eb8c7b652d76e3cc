#pragma once
// Small round snapshots shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "scdn/scdn_problem.hpp"
#include "scdn/vfl_engine.hpp"

namespace scdn::fixtures {

inline DeviceTheory tiny_theory() {
  DeviceTheory t;
  t.L = 1.0;
  t.Q = 1.0;
  t.sigma = 0.5;
  t.eta = 0.05;
  t.w_mean = 1.0;
  t.w_max = 1.0;
  return t;
}

inline RoundDevice tiny_device(int id, Position3 pos, double bits) {
  RoundDevice d;
  d.id = id;
  d.position = pos;
  d.payload_bits = bits;
  d.theory = tiny_theory();
  return d;
}

// Devices hovering at 40 m: the server can only approach them by paying
// exponential hovering energy, so tight deadlines cannot be met cheaply.
inline RoundSnapshot two_device(double t_max) {
  RoundSnapshot s;
  s.devices = {tiny_device(0, {25.0, 30.0, 40.0}, 1e6), tiny_device(1, {70.0, 60.0, 40.0}, 1e6)};
  s.global = GlobalTheory{1.0, 2.3, 30, 2};
  s.prev_pose = {50.0, 50.0, 1.0};
  s.t_max = t_max;
  return s;
}

// n devices on a ring around the centre, mixed ground and elevated.
inline RoundSnapshot ring(int n, Position3 prev, double t_max = 1e-3) {
  RoundSnapshot s;
  for (int k = 0; k < n; ++k) {
    const double a = 2.0 * M_PI * k / n;
    const double z = (k % 2 == 0) ? 0.0 : 20.0;
    s.devices.push_back(tiny_device(k, {50.0 + 35.0 * std::cos(a), 50.0 + 35.0 * std::sin(a), z}, 1e5 * (1 + k % 3)));
  }
  s.global = GlobalTheory{1.0, 2.3, 30, n};
  s.prev_pose = prev;
  s.t_max = t_max;
  return s;
}

// Tiny vertically split blobs problem, full-batch by default.
inline TrainingState tiny_state(int n_dev, int rows, uint64_t seed, std::vector<int> hidden = {3}, int emb = 2,
                                std::vector<int> server_hidden = {4}) {
  auto ds = std::make_shared<VerticalDataset>(make_blobs(rows, rows, 2 * n_dev, 3, 2.0, seed));
  std::vector<DeviceSpec> devs;
  for (int i = 0; i < n_dev; ++i) {
    DeviceSpec d;
    d.id = i;
    d.features = {2 * i, 2 * i + 1};
    d.widths = hidden;
    d.widths.push_back(emb);
    d.batch_size = rows;
    d.opt.lr = 0.1;
    devs.push_back(d);
  }
  TrainingSetup setup;
  setup.emb_dim = emb;
  setup.server_hidden = server_hidden;
  setup.server_batch = rows;
  return init_training(ds, devs, setup, seed);
}

// Loss as a function of one block's parameters, other blocks at cached values.
inline double block_loss(const TrainingState& st, int id, const Eigen::VectorXd& theta, const std::vector<int>& rows) {
  TrainingState s = st;
  if (id == kServer) {
    s.server.set_params(theta);
  } else {
    s.blocks.at(id).net.set_params(theta);
    refresh_embeddings(s, id);
  }
  Eigen::MatrixXd in(static_cast<Eigen::Index>(rows.size()), s.fusion_width());
  for (size_t k = 0; k < s.slots.size(); ++k)
    in.middleCols(static_cast<Eigen::Index>(k) * s.emb_dim, s.emb_dim) = take_rows(s.blocks.at(s.slots[k]).emb_train, rows);
  return loss_value(s.data->task, s.server.forward(in), take_rows(s.data->y_train, rows));
}

inline double fd_rel_error(const TrainingState& st, int id, const std::vector<int>& rows) {
  const Eigen::VectorXd g = partial_grad(st, id, rows);
  const Eigen::VectorXd th = id == kServer ? st.server.params() : st.blocks.at(id).net.params();
  Eigen::VectorXd fd(th.size());
  const double h = 1e-4;
  for (Eigen::Index i = 0; i < th.size(); ++i) {
    Eigen::VectorXd a = th, b = th;
    a(i) += h;
    b(i) -= h;
    fd(i) = (block_loss(st, id, a, rows) - block_loss(st, id, b, rows)) / (2.0 * h);
  }
  return (g - fd).norm() / std::max(1e-12, fd.norm());
}

inline std::vector<int> all_rows(int n) {
  std::vector<int> r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

}  // namespace scdn::fixtures
