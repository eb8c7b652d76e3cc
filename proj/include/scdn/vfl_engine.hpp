#pragma once

// Vertically partitioned training: per-device embedding networks, a server
// fusion network over the concatenated embeddings, and block-wise SGD
// variants with their closed-form scale coefficients.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "scdn/device.hpp"

namespace scdn {

enum class Activation { Relu, Identity };
enum class Task { Classification, Regression };

struct Layer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;
  Activation act = Activation::Identity;
};

struct DenseNet {
  std::vector<Layer> layers;

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init; hidden layers use `hidden`,
  // the last layer uses `out`.
  static DenseNet make(int input_dim, const std::vector<int>& widths, Activation hidden,
                       Activation out, uint64_t seed);

  int input_dim() const;
  int output_dim() const;
  Eigen::Index num_params() const;
  Eigen::VectorXd params() const;
  void set_params(const Eigen::VectorXd& p);
  // Rows are samples.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
};

struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // input of each layer
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
  Eigen::MatrixXd out;
};

ForwardCache forward_cached(const DenseNet& net, const Eigen::MatrixXd& x);
// Backpropagates dL/d(out); writes parameter gradient (flat layout of
// DenseNet::params) into *grad when non-null and returns dL/d(input).
Eigen::MatrixXd backward(const DenseNet& net, const ForwardCache& cache, const Eigen::MatrixXd& d_out,
                         Eigen::VectorXd* grad);

struct VerticalDataset {
  Task task = Task::Classification;
  int num_classes = 0;  // classification only
  Eigen::MatrixXd x_train, x_test;
  Eigen::MatrixXd y_train, y_test;  // one-hot for classification

  int num_features() const { return static_cast<int>(x_train.cols()); }
  int output_dim() const { return static_cast<int>(y_train.cols()); }
};

VerticalDataset make_blobs(int rows_train, int rows_test, int num_features, int num_classes,
                           double separation, uint64_t seed);
// CSV with a header row; the last column is the label. Rows are shuffled
// with `seed` and split by `test_fraction`.
VerticalDataset load_csv(const std::string& path, Task task, double test_fraction, uint64_t seed);

Eigen::MatrixXd feature_block(const Eigen::MatrixXd& x, const std::vector<int>& columns);
Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<int>& rows);

// Mean loss over rows and its gradient with respect to the network output.
double loss_value(Task task, const Eigen::MatrixXd& out, const Eigen::MatrixXd& y);
Eigen::MatrixXd loss_grad(Task task, const Eigen::MatrixXd& out, const Eigen::MatrixXd& y);

struct DeviceBlock {
  int id = 0;
  DenseNet net;
  std::vector<int> features;
  OptimizerSpec opt;
  int batch_size = 32;
  Eigen::MatrixXd emb_train, emb_test;
  bool exited = false;
};

using EmbeddingSet = std::map<int, Eigen::MatrixXd>;

constexpr int kServer = -1;

struct TrainingState {
  std::shared_ptr<const VerticalDataset> data;
  std::map<int, DeviceBlock> blocks;  // every device ever seen
  std::vector<int> slots;             // fusion input order
  DenseNet server;
  OptimizerSpec server_opt;
  int server_batch = 32;
  int emb_dim = 4;
  double initial_loss = 0.0;

  int fusion_width() const;
  int slot_offset(int id) const;  // -1 when the device has no fusion slot
};

struct TrainingSetup {
  std::vector<int> server_hidden{16};
  OptimizerSpec server_opt;
  int server_batch = 32;
  int emb_dim = 4;
};

TrainingState init_training(std::shared_ptr<const VerticalDataset> data, const std::vector<DeviceSpec>& devices,
                            const TrainingSetup& setup, uint64_t seed);

Eigen::MatrixXd forward_embed(const DenseNet& net, const Eigen::MatrixXd& feature_block);
EmbeddingSet cached_embeddings(const TrainingState& state);
Eigen::MatrixXd fusion_input(const TrainingState& state, const EmbeddingSet& emb);
double global_loss(const TrainingState& state, const EmbeddingSet& emb);
double global_loss(const TrainingState& state);
// Test accuracy (classification) or test mean squared error (regression).
double performance(const TrainingState& state);

// Minibatch gradient of one block (device id or kServer) with every other
// block held at its cached round-start value. `net` overrides the block's
// current parameters when non-null.
Eigen::VectorXd partial_grad(const TrainingState& state, int id, const std::vector<int>& rows,
                             const DenseNet* net = nullptr);

double sgd_scale_coeff(const OptimizerSpec& spec, int tau, int q);

using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& theta, int q)>;
// Native recursion of the optimizer variant for tau steps.
Eigen::VectorXd run_optimizer(const OptimizerSpec& spec, const Eigen::VectorXd& theta0, int tau, const GradFn& grad);

std::vector<int> sample_rows(int total, int batch, uint64_t seed);

DenseNet local_round(const TrainingState& state, int id, int tau, const OptimizerSpec& spec, uint64_t seed);

struct DevicePlan {
  int id = 0;
  int tau = 0;
  bool active = false;
  bool link_failed = false;
};

void synchronize(TrainingState& state, const std::vector<DevicePlan>& plans, int server_tau, uint64_t seed);
void refresh_embeddings(TrainingState& state, int id);

void on_exit(TrainingState& state, int id);
// Zero-out-condense: the exited device's fusion inputs are removed.
void on_exit_discard(TrainingState& state, int id);
void on_entry(TrainingState& state, const DeviceSpec& device, uint64_t seed);

int round_tau(double tau);

}  // namespace scdn
