#include "scdn/vfl_engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "scdn/errors.hpp"
#include "scdn/network_dynamics.hpp"

namespace scdn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

DenseNet DenseNet::make(int input_dim, const std::vector<int>& widths, Activation hidden, Activation out,
                        uint64_t seed) {
  DenseNet net;
  std::mt19937_64 rng(seed);
  int fan_in = input_dim;
  for (size_t l = 0; l < widths.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, fan_in)));
    std::uniform_real_distribution<double> u(-bound, bound);
    Layer layer;
    layer.W.resize(widths[l], fan_in);
    layer.b.resize(widths[l]);
    for (Eigen::Index j = 0; j < layer.W.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.W.rows(); ++i) layer.W(i, j) = u(rng);
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) layer.b(i) = u(rng);
    layer.act = (l + 1 == widths.size()) ? out : hidden;
    net.layers.push_back(std::move(layer));
    fan_in = widths[l];
  }
  return net;
}

int DenseNet::input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().W.cols()); }

int DenseNet::output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().W.rows()); }

Eigen::Index DenseNet::num_params() const {
  Eigen::Index n = 0;
  for (const auto& l : layers) n += l.W.size() + l.b.size();
  return n;
}

VectorXd DenseNet::params() const {
  VectorXd p(num_params());
  Eigen::Index k = 0;
  for (const auto& l : layers) {
    p.segment(k, l.W.size()) = Eigen::Map<const VectorXd>(l.W.data(), l.W.size());
    k += l.W.size();
    p.segment(k, l.b.size()) = l.b;
    k += l.b.size();
  }
  return p;
}

void DenseNet::set_params(const VectorXd& p) {
  if (p.size() != num_params()) throw Error(ErrorCode::ShapeMismatch, "parameter vector length");
  Eigen::Index k = 0;
  for (auto& l : layers) {
    Eigen::Map<VectorXd>(l.W.data(), l.W.size()) = p.segment(k, l.W.size());
    k += l.W.size();
    l.b = p.segment(k, l.b.size());
    k += l.b.size();
  }
}

namespace {

MatrixXd activate(const MatrixXd& z, Activation a) {
  if (a == Activation::Relu) return z.cwiseMax(0.0);
  return z;
}

}  // namespace

MatrixXd DenseNet::forward(const MatrixXd& x) const {
  if (x.cols() != input_dim()) throw Error(ErrorCode::ShapeMismatch, "input width does not match network");
  MatrixXd h = x;
  for (const auto& l : layers) {
    MatrixXd z = h * l.W.transpose();
    z.rowwise() += l.b.transpose();
    h = activate(z, l.act);
  }
  return h;
}

ForwardCache forward_cached(const DenseNet& net, const MatrixXd& x) {
  if (x.cols() != net.input_dim()) throw Error(ErrorCode::ShapeMismatch, "input width does not match network");
  ForwardCache c;
  MatrixXd h = x;
  for (const auto& l : net.layers) {
    c.inputs.push_back(h);
    MatrixXd z = h * l.W.transpose();
    z.rowwise() += l.b.transpose();
    h = activate(z, l.act);
    c.pre.push_back(std::move(z));
  }
  c.out = h;
  return c;
}

MatrixXd backward(const DenseNet& net, const ForwardCache& cache, const MatrixXd& d_out, VectorXd* grad) {
  if (grad) grad->resize(net.num_params());
  // offsets of each layer in the flat layout
  std::vector<Eigen::Index> off(net.layers.size());
  Eigen::Index k = 0;
  for (size_t l = 0; l < net.layers.size(); ++l) {
    off[l] = k;
    k += net.layers[l].W.size() + net.layers[l].b.size();
  }
  MatrixXd d = d_out;
  for (size_t li = net.layers.size(); li-- > 0;) {
    const Layer& l = net.layers[li];
    if (l.act == Activation::Relu) d = d.cwiseProduct((cache.pre[li].array() > 0.0).cast<double>().matrix());
    if (grad) {
      MatrixXd gW = d.transpose() * cache.inputs[li];
      grad->segment(off[li], gW.size()) = Eigen::Map<const VectorXd>(gW.data(), gW.size());
      grad->segment(off[li] + gW.size(), l.b.size()) = d.colwise().sum().transpose();
    }
    d = d * l.W;
  }
  return d;
}

VerticalDataset make_blobs(int rows_train, int rows_test, int num_features, int num_classes, double separation,
                           uint64_t seed) {
  VerticalDataset ds;
  ds.task = Task::Classification;
  ds.num_classes = num_classes;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd centers(num_classes, num_features);
  for (int c = 0; c < num_classes; ++c)
    for (int j = 0; j < num_features; ++j) centers(c, j) = separation * gauss(rng);
  std::uniform_int_distribution<int> cls(0, num_classes - 1);
  auto fill = [&](int rows, MatrixXd& x, MatrixXd& y) {
    x.resize(rows, num_features);
    y = MatrixXd::Zero(rows, num_classes);
    for (int i = 0; i < rows; ++i) {
      const int c = cls(rng);
      y(i, c) = 1.0;
      for (int j = 0; j < num_features; ++j) x(i, j) = centers(c, j) + gauss(rng);
    }
  };
  fill(rows_train, ds.x_train, ds.y_train);
  fill(rows_test, ds.x_test, ds.y_test);
  return ds;
}

VerticalDataset load_csv(const std::string& path, Task task, double test_fraction, uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open dataset " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
    if (!rows.empty() && r.size() != rows.front().size())
      throw Error(ErrorCode::ConfigError, "ragged csv row in " + path);
    rows.push_back(std::move(r));
  }
  if (rows.empty() || rows.front().size() < 2) throw Error(ErrorCode::ConfigError, "empty dataset " + path);
  std::vector<int> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const int d = static_cast<int>(rows.front().size()) - 1;
  const int n_test = static_cast<int>(std::lround(test_fraction * rows.size()));
  const int n_train = static_cast<int>(rows.size()) - n_test;
  VerticalDataset ds;
  ds.task = task;
  std::vector<double> labels;
  for (auto& r : rows) labels.push_back(r.back());
  std::vector<double> classes = labels;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  const int out = task == Task::Classification ? static_cast<int>(classes.size()) : 1;
  ds.num_classes = task == Task::Classification ? out : 0;
  auto fill = [&](int from, int count, MatrixXd& x, MatrixXd& y) {
    x.resize(count, d);
    y = MatrixXd::Zero(count, out);
    for (int i = 0; i < count; ++i) {
      const auto& r = rows[order[from + i]];
      for (int j = 0; j < d; ++j) x(i, j) = r[j];
      if (task == Task::Classification) {
        const auto it = std::lower_bound(classes.begin(), classes.end(), r.back());
        y(i, it - classes.begin()) = 1.0;
      } else {
        y(i, 0) = r.back();
      }
    }
  };
  fill(0, n_train, ds.x_train, ds.y_train);
  fill(n_train, n_test, ds.x_test, ds.y_test);
  return ds;
}

MatrixXd feature_block(const MatrixXd& x, const std::vector<int>& columns) {
  MatrixXd out(x.rows(), static_cast<Eigen::Index>(columns.size()));
  for (size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] < 0 || columns[j] >= x.cols()) throw Error(ErrorCode::ShapeMismatch, "feature index out of range");
    out.col(static_cast<Eigen::Index>(j)) = x.col(columns[j]);
  }
  return out;
}

MatrixXd take_rows(const MatrixXd& m, const std::vector<int>& rows) {
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

namespace {

MatrixXd softmax_rows(const MatrixXd& z) {
  MatrixXd p = z;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    p.row(i) = (z.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

}  // namespace

double loss_value(Task task, const MatrixXd& out, const MatrixXd& y) {
  const double n = static_cast<double>(out.rows());
  if (task == Task::Regression) return (out - y).squaredNorm() / (n * static_cast<double>(out.cols()));
  double total = 0.0;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double m = out.row(i).maxCoeff();
    const double lse = m + std::log((out.row(i).array() - m).exp().sum());
    total += lse * y.row(i).sum() - out.row(i).dot(y.row(i));
  }
  return total / n;
}

MatrixXd loss_grad(Task task, const MatrixXd& out, const MatrixXd& y) {
  const double n = static_cast<double>(out.rows());
  if (task == Task::Regression) return 2.0 * (out - y) / (n * static_cast<double>(out.cols()));
  MatrixXd p = softmax_rows(out);
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) *= y.row(i).sum();
  return (p - y) / n;
}

int TrainingState::fusion_width() const { return static_cast<int>(slots.size()) * emb_dim; }

int TrainingState::slot_offset(int id) const {
  for (size_t s = 0; s < slots.size(); ++s)
    if (slots[s] == id) return static_cast<int>(s) * emb_dim;
  return -1;
}

MatrixXd forward_embed(const DenseNet& net, const MatrixXd& block) { return net.forward(block); }

void refresh_embeddings(TrainingState& state, int id) {
  DeviceBlock& b = state.blocks.at(id);
  b.emb_train = b.net.forward(feature_block(state.data->x_train, b.features));
  b.emb_test = b.net.forward(feature_block(state.data->x_test, b.features));
}

TrainingState init_training(std::shared_ptr<const VerticalDataset> data, const std::vector<DeviceSpec>& devices,
                            const TrainingSetup& setup, uint64_t seed) {
  TrainingState st;
  st.data = std::move(data);
  st.emb_dim = setup.emb_dim;
  st.server_opt = setup.server_opt;
  st.server_batch = setup.server_batch;
  for (const auto& d : devices) {
    DeviceBlock b;
    b.id = d.id;
    b.features = d.features;
    b.opt = d.opt;
    b.batch_size = d.batch_size;
    std::vector<int> widths = d.widths;
    if (widths.empty() || widths.back() != st.emb_dim) widths.push_back(st.emb_dim);
    b.net = DenseNet::make(static_cast<int>(d.features.size()), widths, Activation::Relu, Activation::Identity,
                           mix_seed(seed, 0xD0, static_cast<uint64_t>(d.id)));
    st.blocks[d.id] = std::move(b);
    st.slots.push_back(d.id);
    refresh_embeddings(st, d.id);
  }
  std::vector<int> widths = setup.server_hidden;
  widths.push_back(st.data->output_dim());
  st.server = DenseNet::make(st.fusion_width(), widths, Activation::Relu, Activation::Identity, mix_seed(seed, 0x5E));
  st.initial_loss = global_loss(st);
  return st;
}

EmbeddingSet cached_embeddings(const TrainingState& state) {
  EmbeddingSet e;
  for (int id : state.slots) e[id] = state.blocks.at(id).emb_train;
  return e;
}

MatrixXd fusion_input(const TrainingState& state, const EmbeddingSet& emb) {
  const Eigen::Index rows = state.data->x_train.rows();
  MatrixXd in(rows, state.fusion_width());
  for (size_t s = 0; s < state.slots.size(); ++s) {
    const auto it = emb.find(state.slots[s]);
    if (it == emb.end()) throw Error(ErrorCode::MissingEmbedding, "no embedding for device " + std::to_string(state.slots[s]));
    if (it->second.rows() != rows || it->second.cols() != state.emb_dim)
      throw Error(ErrorCode::ShapeMismatch, "embedding block shape");
    in.middleCols(static_cast<Eigen::Index>(s) * state.emb_dim, state.emb_dim) = it->second;
  }
  return in;
}

double global_loss(const TrainingState& state, const EmbeddingSet& emb) {
  return loss_value(state.data->task, state.server.forward(fusion_input(state, emb)), state.data->y_train);
}

double global_loss(const TrainingState& state) { return global_loss(state, cached_embeddings(state)); }

double performance(const TrainingState& state) {
  const Eigen::Index rows = state.data->x_test.rows();
  MatrixXd in(rows, state.fusion_width());
  for (size_t s = 0; s < state.slots.size(); ++s)
    in.middleCols(static_cast<Eigen::Index>(s) * state.emb_dim, state.emb_dim) = state.blocks.at(state.slots[s]).emb_test;
  const MatrixXd out = state.server.forward(in);
  const MatrixXd& y = state.data->y_test;
  if (state.data->task == Task::Regression) return (out - y).squaredNorm() / static_cast<double>(out.size());
  int hit = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    Eigen::Index a, b;
    out.row(i).maxCoeff(&a);
    y.row(i).maxCoeff(&b);
    hit += (a == b);
  }
  return rows > 0 ? static_cast<double>(hit) / static_cast<double>(rows) : 0.0;
}

VectorXd partial_grad(const TrainingState& state, int id, const std::vector<int>& rows, const DenseNet* net) {
  const VerticalDataset& ds = *state.data;
  MatrixXd in(static_cast<Eigen::Index>(rows.size()), state.fusion_width());
  for (size_t s = 0; s < state.slots.size(); ++s)
    in.middleCols(static_cast<Eigen::Index>(s) * state.emb_dim, state.emb_dim) =
        take_rows(state.blocks.at(state.slots[s]).emb_train, rows);
  const MatrixXd y = take_rows(ds.y_train, rows);

  if (id == kServer) {
    const DenseNet& srv = net ? *net : state.server;
    ForwardCache c = forward_cached(srv, in);
    VectorXd g;
    backward(srv, c, loss_grad(ds.task, c.out, y), &g);
    return g;
  }
  const auto it = state.blocks.find(id);
  if (it == state.blocks.end()) throw Error(ErrorCode::UnknownDevice, "device " + std::to_string(id));
  const int off = state.slot_offset(id);
  if (it->second.exited || off < 0) throw Error(ErrorCode::InactiveDevice, "device " + std::to_string(id));
  const DenseNet& dn = net ? *net : it->second.net;
  ForwardCache dc = forward_cached(dn, take_rows(feature_block(ds.x_train, it->second.features), rows));
  in.middleCols(off, state.emb_dim) = dc.out;
  ForwardCache sc = forward_cached(state.server, in);
  const MatrixXd d_in = backward(state.server, sc, loss_grad(ds.task, sc.out, y), nullptr);
  VectorXd g;
  backward(dn, dc, d_in.middleCols(off, state.emb_dim), &g);
  return g;
}

double sgd_scale_coeff(const OptimizerSpec& spec, int tau, int q) {
  switch (spec.variant) {
    case OptVariant::Standard: return 1.0;
    case OptVariant::Proximal: return std::pow(1.0 - spec.lr * spec.mu, tau - 1 - q);
    case OptVariant::Momentum: return (1.0 - std::pow(spec.rho, tau - q)) / (1.0 - spec.rho);
  }
  return 1.0;
}

VectorXd run_optimizer(const OptimizerSpec& spec, const VectorXd& theta0, int tau, const GradFn& grad) {
  VectorXd theta = theta0;
  VectorXd buf = VectorXd::Zero(theta0.size());
  for (int q = 0; q < tau; ++q) {
    const VectorXd g = grad(theta, q);
    switch (spec.variant) {
      case OptVariant::Standard: theta -= spec.lr * g; break;
      case OptVariant::Momentum:
        buf = spec.rho * buf + g;
        theta -= spec.lr * buf;
        break;
      case OptVariant::Proximal: theta -= spec.lr * (g + spec.mu * (theta - theta0)); break;
    }
  }
  return theta;
}

std::vector<int> sample_rows(int total, int batch, uint64_t seed) {
  batch = std::clamp(batch, 0, total);
  std::vector<int> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < batch; ++i) {
    std::uniform_int_distribution<int> pick(i, total - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(batch);
  std::sort(idx.begin(), idx.end());
  return idx;
}

DenseNet local_round(const TrainingState& state, int id, int tau, const OptimizerSpec& spec, uint64_t seed) {
  DenseNet net = id == kServer ? state.server : state.blocks.at(id).net;
  if (tau <= 0) return net;
  const int total = static_cast<int>(state.data->x_train.rows());
  const int batch = id == kServer ? state.server_batch : state.blocks.at(id).batch_size;
  DenseNet work = net;
  auto grad = [&](const VectorXd& theta, int q) {
    work.set_params(theta);
    const auto rows = sample_rows(total, batch, mix_seed(seed, static_cast<uint64_t>(id + 1), static_cast<uint64_t>(q)));
    return partial_grad(state, id, rows, &work);
  };
  net.set_params(run_optimizer(spec, net.params(), tau, grad));
  return net;
}

void synchronize(TrainingState& state, const std::vector<DevicePlan>& plans, int server_tau, uint64_t seed) {
  // Every block trains against the round-start snapshot.
  std::map<int, DenseNet> updated;
  for (const auto& p : plans) {
    if (!p.active || p.tau <= 0 || p.link_failed) continue;
    const auto it = state.blocks.find(p.id);
    if (it == state.blocks.end() || it->second.exited || state.slot_offset(p.id) < 0) continue;
    updated[p.id] = local_round(state, p.id, p.tau, it->second.opt, seed);
  }
  DenseNet server = local_round(state, kServer, server_tau, state.server_opt, seed);
  for (auto& [id, net] : updated) {
    state.blocks.at(id).net = std::move(net);
    refresh_embeddings(state, id);
  }
  state.server = std::move(server);
}

void on_exit(TrainingState& state, int id) {
  const auto it = state.blocks.find(id);
  if (it == state.blocks.end()) throw Error(ErrorCode::UnknownDevice, "device " + std::to_string(id));
  if (it->second.exited) throw Error(ErrorCode::InactiveDevice, "device already exited " + std::to_string(id));
  it->second.exited = true;
}

void on_exit_discard(TrainingState& state, int id) {
  on_exit(state, id);
  const int off = state.slot_offset(id);
  if (off < 0) return;
  Layer& first = state.server.layers.front();
  const Eigen::Index tail = first.W.cols() - off - state.emb_dim;
  MatrixXd w(first.W.rows(), first.W.cols() - state.emb_dim);
  w.leftCols(off) = first.W.leftCols(off);
  w.rightCols(tail) = first.W.rightCols(tail);
  first.W = std::move(w);
  state.slots.erase(std::find(state.slots.begin(), state.slots.end(), id));
}

void on_entry(TrainingState& state, const DeviceSpec& device, uint64_t seed) {
  if (state.blocks.count(device.id)) throw Error(ErrorCode::DuplicateDevice, "device " + std::to_string(device.id));
  DeviceBlock b;
  b.id = device.id;
  b.features = device.features;
  b.opt = device.opt;
  b.batch_size = device.batch_size;
  std::vector<int> widths = device.widths;
  if (widths.empty() || widths.back() != state.emb_dim) widths.push_back(state.emb_dim);
  b.net = DenseNet::make(static_cast<int>(device.features.size()), widths, Activation::Relu, Activation::Identity,
                         mix_seed(seed, 0xD0, static_cast<uint64_t>(device.id)));
  state.blocks[device.id] = std::move(b);
  refresh_embeddings(state, device.id);
  Layer& first = state.server.layers.front();
  MatrixXd w = MatrixXd::Zero(first.W.rows(), first.W.cols() + state.emb_dim);
  w.leftCols(first.W.cols()) = first.W;
  first.W = std::move(w);
  state.slots.push_back(device.id);
}

int round_tau(double tau) { return static_cast<int>(std::floor(tau + 0.5)); }

}  // namespace scdn
