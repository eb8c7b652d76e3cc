#include <boost/math/special_functions/lambert_w.hpp>
#include <cmath>

#include "doctest.h"
#include "scdn/errors.hpp"
#include "scdn/theory.hpp"

using namespace scdn;
using Eigen::MatrixXd;

TEST_CASE("smoothness from spectral norms") {
  DenseNet n = DenseNet::make(2, {2}, Activation::Relu, Activation::Identity, 1);
  n.layers[0].W = MatrixXd::Zero(2, 2);
  n.layers[0].W(0, 0) = 2.0;
  n.layers[0].W(1, 1) = 0.5;
  CHECK(estimate_smoothness(n) == doctest::Approx(4.0).epsilon(1e-8));

  n.layers[0].W.setZero();
  CHECK(estimate_smoothness(n) == 0.0);

  DenseNet two = DenseNet::make(3, {3, 2}, Activation::Relu, Activation::Identity, 1);
  two.layers[0].W = 2.0 * MatrixXd::Identity(3, 3);
  two.layers[1].W = MatrixXd::Zero(2, 3);
  two.layers[1].W(0, 1) = 3.0;
  CHECK(estimate_smoothness(two) == doctest::Approx(36.0).epsilon(1e-8));

  MatrixXd r = MatrixXd::Random(5, 4);
  Eigen::JacobiSVD<MatrixXd> svd(r);
  CHECK(spectral_norm(r, 3, 500, 1e-14) == doctest::Approx(svd.singularValues()(0)).epsilon(1e-6));
}

TEST_CASE("effective tau") {
  CHECK(effective_tau(5, 1.0) == 5.0);
  CHECK(effective_tau(0, 0.3) == 0.0);
  CHECK(effective_tau(5, std::exp(-1.0)) == doctest::Approx(1.8394).epsilon(1e-4));
}

TEST_CASE("upsilon") {
  DeviceTheory d;
  d.tau_eff = 5;
  d.eta = 0.1;
  d.w_mean = d.w_max = 1.0;
  CHECK(upsilon(d) == doctest::Approx(4.0));
  DeviceTheory d2 = d;
  d2.eta = 0.2;
  CHECK(upsilon(d2) == doctest::Approx(upsilon(d) / 2.0));
  d.tau_eff = 0.0;
  CHECK_THROWS_AS(upsilon(d), Error);
  CHECK(upsilon_shifted(d, 1e-6) == doctest::Approx(1e6));
  d.tau_eff = 1e-9;
  CHECK(upsilon_shifted(d, 1e-6) < 1e6);
}

TEST_CASE("big upsilon") {
  DeviceTheory d;
  d.tau_eff = 0.0;
  d.L = 3.0;
  d.eta = 0.1;
  CHECK(big_upsilon(d, 2.0) == 0.0);
  d.tau_eff = 1;
  d.L = 1;
  d.eta = 1;
  d.w_max = 1;
  CHECK(big_upsilon(d, 1.0) == doctest::Approx(2.0));
  d.tau_eff = 2.0;
  d.L = 1.5;
  d.eta = 0.3;
  const double base1 = std::pow(d.tau_eff * d.L, 2) * std::pow(d.eta, 3);
  const double base2 = 0.7 * std::pow(d.tau_eff * d.eta, 2);
  d.w_max = 2.0;
  CHECK(big_upsilon(d, 0.7) == doctest::Approx(8.0 * base1 + 4.0 * base2));
}

TEST_CASE("xi bound") {
  DeviceTheory d;
  d.tau_eff = 4.0;
  d.eta = 0.05;
  d.w_mean = 1.0;
  d.w_max = 1.0;
  d.L = 0.0;
  d.Q = 0.0;
  d.sigma = 0.0;
  GlobalTheory g;
  g.L = 0.0;
  g.F0 = 2.0;
  g.R = 10;
  g.N = 4;
  const double ut = 1.0 / (4.0 * 0.05 * 0.5 + 1e-6);
  CHECK(xi_bound(d, g, 1.0, 1e-6) == doctest::Approx(ut * 2.0 / 40.0).epsilon(1e-12));
  CHECK(xi_bound(d, g, 2.0, 1e-6) == doctest::Approx(2.0 * xi_bound(d, g, 1.0, 1e-6)));

  d.L = 1.3;
  d.Q = 0.8;
  d.sigma = 0.4;
  d.w_max = 1.2;
  d.w_mean = 1.1;
  g.L = 5.2;
  const double den = 4.0 * 0.05 * 1.1 - 0.5 * 4.0 * 0.05 * 1.2 + 1e-6;
  const double ups = std::pow(4.0 * 1.3, 2) * std::pow(0.05 * 1.2, 3) + 5.2 * std::pow(4.0 * 0.05 * 1.2, 2);
  const double expect = 1.5 / den * (2.0 / 40.0 + 2.0 * (0.64 + 0.16) * ups);
  CHECK(xi_bound(d, g, 1.5, 1e-6) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("proposition constants") {
  Prop1Constants c = proposition1_constants(5, 5, 2.0, 0.1, 1.0, 1.0, 0.5);
  CHECK(c.C3 == 0.0);
  c = proposition1_constants(1, 1, 1, 1, 1, 1, 1);
  CHECK(c.C1 == doctest::Approx(128.0));
  CHECK(c.C2 == doctest::Approx(32.0));
  Prop1Constants a = proposition1_constants(5, 3, 2.0, 0.1, 1.0, 1.0, 0.5);
  Prop1Constants b = proposition1_constants(5, 3, 2.0, 0.1, 1.0, 7.0, 3.5);
  CHECK(a.C2 == b.C2);
}

TEST_CASE("mean scale closed forms match direct averages") {
  for (OptVariant v : {OptVariant::Momentum, OptVariant::Proximal, OptVariant::Standard}) {
    OptimizerSpec s;
    s.variant = v;
    s.rho = 0.2;
    s.lr = 0.1;
    s.mu = 0.4;
    for (int tau = 1; tau <= 12; ++tau) {
      double sum = 0.0;
      for (int q = 0; q < tau; ++q) sum += sgd_scale_coeff(s, tau, q);
      CHECK(w_mean(s, tau) == doctest::Approx(sum / tau).epsilon(1e-12));
    }
  }
}

TEST_CASE("Lambert-W threshold") {
  const double oracle = std::exp(boost::math::lambert_wm1(-0.5 / std::sqrt(std::exp(1.0))) + 0.5);
  CHECK(rho_threshold() == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(rho_threshold() == doctest::Approx(0.2846).epsilon(5e-4));
  const double rho = 0.9 * rho_threshold();
  for (int tau = 1; tau <= 50; ++tau) CHECK(h_tau(rho, tau) > 0.0);
  bool violated = false;
  for (int tau = 1; tau <= 50; ++tau) violated |= h_tau(0.6, tau) < 0.0;
  CHECK(violated);
}

TEST_CASE("convergence conditions") {
  OptimizerSpec s;
  CHECK(check_conditions(s, 5).passed);
  s.variant = OptVariant::Proximal;
  s.lr = 0.2;
  s.mu = 0.5;
  CHECK_FALSE(check_conditions(s, 5).passed);
  s.lr = 0.1;
  CHECK(check_conditions(s, 5).passed);
  s.variant = OptVariant::Momentum;
  s.rho = 0.6;
  CHECK_FALSE(check_conditions(s, 5).passed);
  s.rho = 0.2;
  CHECK(check_conditions(s, 5).passed);
}

TEST_CASE("gradient statistics") {
  auto ds = std::make_shared<VerticalDataset>(make_blobs(12, 4, 4, 2, 1.5, 2));
  DeviceSpec a, b;
  a.id = 0;
  a.features = {0, 1};
  a.widths = {3, 2};
  a.batch_size = 12;
  b = a;
  b.id = 1;
  b.features = {2, 3};
  TrainingSetup setup;
  setup.emb_dim = 2;
  TrainingState st = init_training(ds, {a, b}, setup, 4);
  GradStats full = estimate_grad_stats(st, 0, 10, 3);
  CHECK(full.sigma == 0.0);
  CHECK(full.Q > 0.0);
  st.blocks.at(0).batch_size = 4;
  GradStats s1 = estimate_grad_stats(st, 0, 10, 3);
  GradStats s2 = estimate_grad_stats(st, 0, 10, 3);
  CHECK(s1.Q == s2.Q);
  CHECK(s1.sigma == s2.sigma);
  CHECK(s1.sigma > 0.0);
  for (auto& l : st.server.layers) l.W.setZero();
  CHECK(estimate_grad_stats(st, 0, 10, 3).Q == 0.0);
}
