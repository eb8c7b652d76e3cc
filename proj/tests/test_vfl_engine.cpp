#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "scdn/errors.hpp"
#include "scdn/network_dynamics.hpp"
#include "scdn/vfl_engine.hpp"

using namespace scdn;
using Eigen::MatrixXd;
using Eigen::VectorXd;

using fixtures::all_rows;
using fixtures::fd_rel_error;
using fixtures::tiny_state;

TEST_CASE("forward embedding basics") {
  DenseNet z = DenseNet::make(3, {2}, Activation::Relu, Activation::Identity, 1);
  z.set_params(VectorXd::Zero(z.num_params()));
  MatrixXd x = MatrixXd::Random(5, 3);
  CHECK(forward_embed(z, x).isZero(0.0));

  DenseNet id = DenseNet::make(3, {3}, Activation::Relu, Activation::Identity, 1);
  id.layers[0].W = MatrixXd::Identity(3, 3);
  id.layers[0].b.setZero();
  CHECK(forward_embed(id, x) == x);

  DenseNet r = DenseNet::make(3, {4, 2}, Activation::Relu, Activation::Identity, 5);
  CHECK(forward_embed(r, x) == forward_embed(r, x));
  CHECK_THROWS_AS(forward_embed(r, MatrixXd::Zero(2, 4)), Error);
}

TEST_CASE("weight init bounds") {
  DenseNet n = DenseNet::make(9, {5, 3}, Activation::Relu, Activation::Identity, 3);
  CHECK(n.layers[0].W.cwiseAbs().maxCoeff() <= 1.0 / 3.0);
  CHECK(n.layers[1].W.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(5.0));
}

TEST_CASE("global loss reference values") {
  SUBCASE("regression exact fit gives zero") {
    auto ds = std::make_shared<VerticalDataset>();
    ds->task = Task::Regression;
    ds->x_train = MatrixXd::Random(6, 1);
    ds->y_train = ds->x_train;
    ds->x_test = ds->x_train;
    ds->y_test = ds->y_train;
    DeviceSpec d;
    d.id = 0;
    d.features = {0};
    d.widths = {1};
    TrainingSetup setup;
    setup.emb_dim = 1;
    setup.server_hidden = {};
    TrainingState st = init_training(ds, {d}, setup, 1);
    st.blocks.at(0).net.layers[0].W.setConstant(1.0);
    st.blocks.at(0).net.layers[0].b.setZero();
    refresh_embeddings(st, 0);
    st.server.layers[0].W.setConstant(1.0);
    st.server.layers[0].b.setZero();
    CHECK(global_loss(st) == doctest::Approx(0.0));
    std::vector<int> rows{0, 2, 4};
    CHECK(partial_grad(st, 0, rows).norm() == doctest::Approx(0.0));
  }
  SUBCASE("uniform logits give ln C") {
    TrainingState st = tiny_state(2, 8, 3);
    for (auto& l : st.server.layers) {
      l.W.setZero();
      l.b.setZero();
    }
    CHECK(global_loss(st) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  }
  SUBCASE("three-sample scalar recomputation") {
    MatrixXd out(3, 3), y = MatrixXd::Zero(3, 3);
    out << 0.2, -1.0, 0.5, 1.5, 0.3, -0.7, -0.1, 0.0, 2.0;
    y(0, 2) = 1;
    y(1, 0) = 1;
    y(2, 1) = 1;
    double total = 0.0;
    const int label[3] = {2, 0, 1};
    for (int i = 0; i < 3; ++i) {
      double z = 0.0;
      for (int c = 0; c < 3; ++c) z += std::exp(out(i, c));
      total += -(out(i, label[i]) - std::log(z));
    }
    CHECK(loss_value(Task::Classification, out, y) == doctest::Approx(total / 3.0).epsilon(1e-12));
  }
  SUBCASE("missing embeddings are rejected") {
    TrainingState st = tiny_state(2, 8, 3);
    EmbeddingSet e = cached_embeddings(st);
    e.erase(1);
    CHECK_THROWS_AS(global_loss(st, e), Error);
  }
}

TEST_CASE("partial gradients match central differences") {
  for (int trial = 0; trial < 5; ++trial) {
    std::mt19937_64 rng(100 + trial);
    std::uniform_int_distribution<int> w(2, 5);
    std::vector<int> hidden;
    const int layers = 1 + trial % 2;
    for (int l = 0; l < layers; ++l) hidden.push_back(w(rng));
    TrainingState st = tiny_state(2, 4, 100 + trial, hidden, 2);
    const auto rows = all_rows(4);
    CHECK(fd_rel_error(st, 0, rows) < 1e-5);
    CHECK(fd_rel_error(st, 1, rows) < 1e-5);
    CHECK(fd_rel_error(st, kServer, rows) < 1e-5);
  }
}

TEST_CASE("full minibatch equals full gradient") {
  TrainingState st = tiny_state(2, 10, 4);
  const VectorXd a = partial_grad(st, 0, all_rows(10));
  const VectorXd b = partial_grad(st, 0, sample_rows(10, 10, 77));
  CHECK((a - b).norm() == 0.0);
  CHECK_THROWS_AS(partial_grad(st, 9, all_rows(10)), Error);
}

TEST_CASE("scale coefficients") {
  OptimizerSpec s;
  CHECK(sgd_scale_coeff(s, 7, 3) == 1.0);
  s.variant = OptVariant::Momentum;
  s.rho = 0.1;
  CHECK(sgd_scale_coeff(s, 2, 1) == doctest::Approx(1.0));
  CHECK(sgd_scale_coeff(s, 2, 0) == doctest::Approx(1.1));
  s.variant = OptVariant::Proximal;
  s.lr = 0.1;
  s.mu = 0.5;
  CHECK(sgd_scale_coeff(s, 3, 2) == doctest::Approx(1.0));
  CHECK(sgd_scale_coeff(s, 3, 0) == doctest::Approx(0.9025));
}

TEST_CASE("optimizer recursions equal the weighted-sum closed form") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  const int tau = 5, dim = 7;
  std::vector<VectorXd> grads(tau, VectorXd(dim));
  for (auto& v : grads)
    for (int i = 0; i < dim; ++i) v(i) = g(rng);
  VectorXd th0(dim);
  for (int i = 0; i < dim; ++i) th0(i) = g(rng);
  for (OptVariant var : {OptVariant::Standard, OptVariant::Momentum, OptVariant::Proximal}) {
    OptimizerSpec s;
    s.variant = var;
    s.lr = 0.07;
    s.rho = 0.25;
    s.mu = 0.3;
    const VectorXd th = run_optimizer(s, th0, tau, [&](const VectorXd&, int q) { return grads[q]; });
    VectorXd closed = th0;
    for (int q = 0; q < tau; ++q) closed -= s.lr * sgd_scale_coeff(s, tau, q) * grads[q];
    CHECK((th - closed).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("local round") {
  TrainingState st = tiny_state(2, 12, 6);
  OptimizerSpec s;
  s.lr = 0.05;
  const DenseNet same = local_round(st, 0, 0, s, 1);
  CHECK(same.params() == st.blocks.at(0).net.params());
  st.blocks.at(0).batch_size = 5;
  const DenseNet one = local_round(st, 0, 1, s, 1);
  const auto rows = sample_rows(12, 5, mix_seed(1, 1, 0));
  const VectorXd expect = st.blocks.at(0).net.params() - s.lr * partial_grad(st, 0, rows);
  CHECK((one.params() - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("synchronize respects link failures and block isolation") {
  TrainingState st = tiny_state(3, 10, 9);
  const EmbeddingSet before = cached_embeddings(st);
  const VectorXd server_before = st.server.params();

  TrainingState failed = st;
  synchronize(failed, {{0, 3, true, true}, {1, 3, true, true}, {2, 3, true, true}}, 0, 5);
  for (auto& [id, e] : cached_embeddings(failed)) CHECK(e == before.at(id));

  TrainingState one = st;
  synchronize(one, {{0, 0, true, false}, {1, 3, true, false}, {2, 3, false, false}}, 0, 5);
  const EmbeddingSet after = cached_embeddings(one);
  CHECK(after.at(0) == before.at(0));
  CHECK(after.at(1) != before.at(1));
  CHECK(after.at(2) == before.at(2));
  CHECK(one.server.params() == server_before);

  TrainingState srv = st;
  synchronize(srv, {}, 3, 5);
  for (auto& [id, e] : cached_embeddings(srv)) CHECK(e == before.at(id));
  CHECK(srv.server.params() != server_before);
}

TEST_CASE("exits freeze embeddings") {
  TrainingState st = tiny_state(3, 10, 10);
  on_exit(st, 1);
  const MatrixXd frozen = st.blocks.at(1).emb_train;
  CHECK(st.fusion_width() == 3 * st.emb_dim);
  for (int r = 0; r < 3; ++r) {
    synchronize(st, {{0, 2, true, false}, {1, 2, true, false}, {2, 2, true, false}}, 2, 20 + r);
    CHECK(st.blocks.at(1).emb_train == frozen);
  }
  CHECK_NOTHROW(global_loss(st));
  CHECK_THROWS_AS(on_exit(st, 1), Error);
  CHECK_THROWS_AS(on_exit(st, 99), Error);
  CHECK_THROWS_AS(partial_grad(st, 1, all_rows(4)), Error);
}

TEST_CASE("discarding exits removes fusion inputs") {
  TrainingState st = tiny_state(3, 10, 10);
  on_exit_discard(st, 1);
  CHECK(st.fusion_width() == 2 * st.emb_dim);
  CHECK(st.server.input_dim() == 2 * st.emb_dim);
  CHECK_NOTHROW(global_loss(st));
}

TEST_CASE("entries widen the fusion input with zero columns") {
  TrainingState st = tiny_state(2, 10, 12);
  const double loss_before = global_loss(st);
  const int width = st.server.input_dim();
  DeviceSpec d;
  d.id = 7;
  d.features = {0, 3};
  d.widths = {3, 2};
  on_entry(st, d, 3);
  CHECK(st.server.input_dim() == width + st.emb_dim);
  CHECK(st.slots.size() == 3);
  CHECK(global_loss(st) == doctest::Approx(loss_before).epsilon(1e-14));
  CHECK_THROWS_AS(on_entry(st, d, 3), Error);
}

TEST_CASE("tau rounding") {
  CHECK(round_tau(2.5) == 3);
  CHECK(round_tau(2.49) == 2);
  CHECK(round_tau(0.0) == 0);
}
