#include <random>

#include "doctest.h"
#include "scdn/errors.hpp"
#include "scdn/importance.hpp"
#include "scdn/network_dynamics.hpp"

using namespace scdn;
using Eigen::MatrixXd;

namespace {

// Column 0 separates the two classes, column 1 is pure noise.
TrainingState signal_and_noise(uint64_t seed) {
  auto ds = std::make_shared<VerticalDataset>();
  ds->num_classes = 2;
  const int rows = 40;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (MatrixXd* x : {&ds->x_train, &ds->x_test}) *x = MatrixXd(rows, 2);
  for (MatrixXd* y : {&ds->y_train, &ds->y_test}) *y = MatrixXd::Zero(rows, 2);
  for (int split = 0; split < 2; ++split) {
    MatrixXd& x = split == 0 ? ds->x_train : ds->x_test;
    MatrixXd& y = split == 0 ? ds->y_train : ds->y_test;
    for (int r = 0; r < rows; ++r) {
      const int c = r % 2;
      x(r, 0) = (c == 0 ? -2.0 : 2.0) + 0.3 * n01(rng);
      x(r, 1) = n01(rng);
      y(r, c) = 1.0;
    }
  }
  std::vector<DeviceSpec> devs(2);
  for (int i = 0; i < 2; ++i) {
    devs[i].id = i;
    devs[i].features = {i};
    devs[i].widths = {3, 2};
    devs[i].batch_size = rows;
  }
  TrainingSetup setup;
  setup.emb_dim = 2;
  setup.server_hidden = {4};
  setup.server_batch = rows;
  TrainingState st = init_training(ds, devs, setup, seed);
  for (int r = 0; r < 40; ++r) synchronize(st, {{0, 5, true, false}, {1, 5, true, false}}, 5, mix_seed(seed, r));
  return st;
}

}  // namespace

TEST_CASE("exclusion losses") {
  TrainingState st = signal_and_noise(7);
  EmbeddingSet emb = cached_embeddings(st);
  const std::vector<double> l = exclusion_losses(st, emb, {0, 1});
  CHECK(l[0] > l[1]);
  CHECK(l[0] > global_loss(st, emb));

  emb[1].setZero();
  const double base = global_loss(st, emb);
  CHECK(exclusion_losses(st, emb, {1})[0] == base);
  CHECK_THROWS_AS(exclusion_losses(st, emb, {5}), Error);
}

TEST_CASE("value scaling") {
  const std::vector<double> a = scale_importance({2.0, 1.0}, 1.0, 2.0);
  CHECK(a[0] == 2.0);
  CHECK(a[1] == 1.0);
  const std::vector<double> b = scale_importance({3.0, 2.0, 1.0}, 1.0, 3.0);
  CHECK(b[0] == doctest::Approx(3.0));
  CHECK(b[1] == doctest::Approx(2.0));
  CHECK(b[2] == doctest::Approx(1.0));
  for (double g : scale_importance({0.7, 0.7, 0.7}, 1.0, 4.0)) CHECK(g == 1.0);
  CHECK(scale_importance({}, 1.0, 2.0).empty());
  CHECK(scale_importance({5.0}, 1.0, 2.0)[0] == 1.0);
}

TEST_CASE("scaling is order preserving and affine invariant") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> l(6), shifted(6);
    for (int i = 0; i < 6; ++i) l[i] = u(rng);
    l[5] = l[2];
    for (int i = 0; i < 6; ++i) shifted[i] = 3.5 * l[i] + 7.0;
    for (ImportanceScaling m : {ImportanceScaling::Value, ImportanceScaling::Rank}) {
      const std::vector<double> g = scale_importance(l, 1.0, 2.5, m);
      const std::vector<double> h = scale_importance(shifted, 1.0, 2.5, m);
      for (int i = 0; i < 6; ++i) {
        CHECK(g[i] >= 1.0);
        CHECK(g[i] <= 2.5);
        CHECK(g[i] == doctest::Approx(h[i]).epsilon(1e-12));
        for (int j = 0; j < 6; ++j) {
          if (l[i] > l[j]) CHECK(g[i] > g[j]);
          if (l[i] == l[j]) CHECK(g[i] == g[j]);
        }
      }
      CHECK(*std::min_element(g.begin(), g.end()) == 1.0);
    }
  }
}

TEST_CASE("rank scaling spaces distinct levels evenly") {
  const std::vector<double> g = scale_importance({10.0, 0.1, 0.2, 0.2}, 1.0, 3.0, ImportanceScaling::Rank);
  CHECK(g[0] == 3.0);
  CHECK(g[1] == 1.0);
  CHECK(g[2] == 2.0);
  CHECK(g[3] == 2.0);
  CHECK_THROWS_AS(scale_importance({1.0}, 2.0, 1.5), Error);
}
