#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fedhkd/adam.hpp"
#include "fedhkd/error.hpp"
#include "fedhkd/layers.hpp"
#include "fedhkd/loss.hpp"
#include "fedhkd/rng.hpp"
#include "support/oracles.hpp"

using namespace fedhkd;
using fedhkd::testing::finite_difference;
using fedhkd::testing::max_relative_error;
using fedhkd::testing::ReferenceAdam;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng,
                     double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.next_normal(0.0, scale);
  return t;
}

}  // namespace

TEST_CASE("tensor shape/data invariant") {
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), ShapeError);
  CHECK_THROWS_AS(Tensor({0, 3}), ShapeError);
}

TEST_CASE("matmul against hand results") {
  const Tensor a = Tensor::matrix(2, 2, {1, 2, 3, 4});
  const Tensor b = Tensor::matrix(2, 2, {5, 6, 7, 8});
  const Tensor c = matmul(a, b);
  CHECK(c.at(0, 0) == 19);
  CHECK(c.at(0, 1) == 22);
  CHECK(c.at(1, 0) == 43);
  CHECK(c.at(1, 1) == 50);
  CHECK_THROWS_AS(matmul(a, Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6})),
                  ShapeError);
}

TEST_CASE("softmax basics") {
  const Tensor uniform = softmax(Tensor::vector({0.0, 0.0, 0.0}));
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(uniform[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  const Tensor two = softmax(Tensor::vector({std::log(2.0), 0.0}));
  CHECK(two[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(two[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  // Max-subtraction keeps huge logits finite.
  const Tensor stable = softmax(Tensor::vector({1000.0, 0.0}));
  CHECK(stable.all_finite());
  CHECK(stable[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(stable[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one and preserve argmax") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.next_below(10);
    const Tensor z = random_tensor({1, n}, rng, 5.0);
    const Tensor p = softmax(z);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += p[i];
      CHECK(p[i] > 0.0);
      CHECK(p[i] < 1.0);
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    CHECK(argmax_row(p.row_span(0)) == argmax_row(z.row_span(0)));
  }
}

TEST_CASE("cross entropy closed forms") {
  // Perfect one-hot prediction: loss is exactly -log(1) = 0.
  const Tensor onehot = Tensor::matrix(1, 3, {0.0, 1.0, 0.0});
  CHECK(cross_entropy(onehot, {1}).loss == doctest::Approx(0.0));

  const std::size_t n = 5;
  const Tensor flat = Tensor::full({1, n}, 1.0 / n);
  CHECK(cross_entropy(flat, {2}).loss ==
        doctest::Approx(std::log(double(n))).epsilon(1e-14));

  CHECK_THROWS_AS(cross_entropy(flat, {7}), Error);
}

TEST_CASE("cross entropy gradient matches finite differences") {
  Rng rng(11);
  Tensor logits = random_tensor({4, 6}, rng, 2.0);
  std::vector<std::size_t> labels = {1, 0, 5, 3};

  auto loss_fn = [&] { return cross_entropy(softmax(logits), labels).loss; };
  const Tensor numeric = finite_difference(loss_fn, logits);
  const Tensor analytic = cross_entropy(softmax(logits), labels).logit_grad;
  CHECK(max_relative_error(analytic, numeric) < 1e-4);
}

TEST_CASE("dense layer identity and shape errors") {
  Layer dense = Layer::dense(2, 2);
  dense.weight = Tensor::matrix(2, 2, {1, 0, 0, 1});
  const Tensor x = Tensor::matrix(1, 2, {1.0, 2.0});
  const Tensor y = layer_forward(dense, x);
  CHECK(y.at(0, 0) == 1.0);
  CHECK(y.at(0, 1) == 2.0);

  const Tensor bad = Tensor::matrix(1, 3, {1, 2, 3});
  CHECK_THROWS_WITH_AS(static_cast<void>(layer_forward(dense, bad)),
                       doctest::Contains("dense"), ShapeError);
}

TEST_CASE("relu forward and gating backward") {
  Layer relu = Layer::relu();
  const Tensor x = Tensor::matrix(1, 3, {-1.0, 0.0, 2.0});
  auto [y, cache] = layer_forward(relu, x, Mode::kTrain);
  CHECK(y.at(0, 0) == 0.0);
  CHECK(y.at(0, 1) == 0.0);
  CHECK(y.at(0, 2) == 2.0);

  const Tensor up = Tensor::matrix(1, 3, {1.0, 1.0, 1.0});
  const Tensor down = layer_backward(relu, cache, up, nullptr);
  CHECK(down.at(0, 0) == 0.0);  // input -1 blocks the gradient
  CHECK(down.at(0, 2) == 1.0);  // input +2 passes it
}

TEST_CASE("dense backward on zero upstream gradient") {
  Rng rng(3);
  Layer dense = Layer::dense_init(3, 4, rng);
  const Tensor x = random_tensor({2, 3}, rng);
  auto [y, cache] = layer_forward(dense, x, Mode::kTrain);
  LayerGrads grads;
  const Tensor dx =
      layer_backward(dense, cache, Tensor({2, 4}), &grads);
  for (double v : dx.values()) CHECK(v == 0.0);
  for (const auto& g : grads.grads)
    for (double v : g.values()) CHECK(v == 0.0);
}

TEST_CASE("batchnorm standardizes a two-sample batch") {
  Layer bn = Layer::batchnorm(1, 0.1, 0.0);  // epsilon 0: exact +-1 expected
  const Tensor x = Tensor::matrix(2, 1, {0.0, 2.0});
  auto [y, cache] = layer_forward(bn, x, Mode::kTrain);
  CHECK(y.at(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(y.at(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("batchnorm train-mode output is standardized before scale/shift") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t batch = 2 + rng.next_below(7);
    const std::size_t dim = 1 + rng.next_below(8);
    Layer bn = Layer::batchnorm(dim);
    const Tensor x = random_tensor({batch, dim}, rng, 3.0);
    auto [y, cache] = layer_forward(bn, x, Mode::kTrain);
    for (std::size_t c = 0; c < dim; ++c) {
      double in_mean = 0.0;
      double mean = 0.0;
      for (std::size_t r = 0; r < batch; ++r) {
        mean += y.at(r, c);
        in_mean += x.at(r, c);
      }
      mean /= double(batch);
      in_mean /= double(batch);
      double in_var = 0.0;
      double var = 0.0;
      for (std::size_t r = 0; r < batch; ++r) {
        const double d = y.at(r, c) - mean;
        var += d * d;
        const double di = x.at(r, c) - in_mean;
        in_var += di * di;
      }
      var /= double(batch);
      in_var /= double(batch);
      CHECK(std::abs(mean) < 1e-9);
      // Variance reaches 1 up to the epsilon in the denominator, exactly
      // v / (v + eps).
      CHECK(var ==
            doctest::Approx(in_var / (in_var + bn.epsilon)).epsilon(1e-9));
    }
  }
}

TEST_CASE("batchnorm train mode requires batch of two") {
  Layer bn = Layer::batchnorm(2);
  const Tensor single = Tensor::matrix(1, 2, {1.0, 2.0});
  CHECK_THROWS_AS(static_cast<void>(layer_forward(bn, single, Mode::kTrain)),
                  Error);
  // Eval mode accepts a single row.
  CHECK_NOTHROW(static_cast<void>(layer_forward(bn, single)));
}

TEST_CASE("batchnorm eval uses running statistics") {
  Layer bn = Layer::batchnorm(1, 0.5, 1e-12);
  bn.running_mean[0] = 3.0;
  bn.running_var[0] = 4.0;
  const Tensor x = Tensor::matrix(1, 1, {5.0});
  const Tensor y = layer_forward(bn, x);
  CHECK(y.at(0, 0) == doctest::Approx(1.0).epsilon(1e-9));  // (5-3)/2
}

TEST_CASE("backward rejects eval-mode or mismatched caches") {
  Layer dense = Layer::dense(2, 2);
  LayerCache eval_cache;
  eval_cache.kind = LayerKind::kDense;
  eval_cache.train = false;
  eval_cache.input = Tensor::matrix(1, 2, {1, 2});
  CHECK_THROWS_AS(static_cast<void>(layer_backward(
                      dense, eval_cache, Tensor::matrix(1, 2, {1, 1}),
                      nullptr)),
                  Error);

  Layer relu = Layer::relu();
  auto [y, relu_cache] =
      layer_forward(relu, Tensor::matrix(1, 2, {1, 2}), Mode::kTrain);
  CHECK_THROWS_AS(static_cast<void>(layer_backward(
                      dense, relu_cache, Tensor::matrix(1, 2, {1, 1}),
                      nullptr)),
                  Error);
}

TEST_CASE("analytic layer gradients match finite differences") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t batch = 2 + rng.next_below(7);   // <= 8
    const std::size_t in_dim = 1 + rng.next_below(16);  // <= 16
    const std::size_t out_dim = 1 + rng.next_below(16);

    Layer layer;
    std::size_t width = in_dim;
    switch (trial % 3) {
      case 0:
        layer = Layer::dense_init(in_dim, out_dim, rng);
        width = out_dim;
        break;
      case 1:
        layer = Layer::relu();
        break;
      case 2:
        layer = Layer::batchnorm(in_dim);
        for (auto& v : layer.scale.values()) v = 0.5 + rng.next_unit();
        for (auto& v : layer.shift.values()) v = rng.next_normal();
        break;
    }

    Tensor x = random_tensor({batch, in_dim}, rng);
    // Shift away from relu's kink; finite differences are invalid there.
    if (layer.kind == LayerKind::kRelu)
      for (auto& v : x.values())
        if (std::abs(v) < 1e-3) v = 0.1;

    // Random linear functional of the output makes the scalar loss generic.
    const Tensor probe = random_tensor({batch, width}, rng);
    auto loss_fn = [&]() {
      Layer copy = layer;
      auto [out, cache] = layer_forward(copy, x, Mode::kTrain);
      double acc = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i)
        acc += out[i] * probe[i];
      return acc;
    };

    auto [out, cache] = layer_forward(layer, x, Mode::kTrain);
    LayerGrads grads;
    const Tensor dx = layer_backward(layer, cache, probe, &grads);

    const Tensor dx_num = finite_difference(loss_fn, x);
    CHECK(max_relative_error(dx, dx_num) < 1e-4);

    auto params = layer.trainable_params();
    for (std::size_t p = 0; p < params.size(); ++p) {
      const Tensor num = finite_difference(loss_fn, *params[p]);
      CHECK(max_relative_error(grads.grads[p], num) < 1e-4);
    }
  }
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
  Tensor p = Tensor::vector({1.0, -2.0, 3.0});
  std::vector<Tensor*> params{&p};
  AdamState state{std::span<Tensor* const>(params)};
  const std::vector<Tensor> grads{Tensor({3})};
  adam_step(std::span<Tensor* const>(params), grads, state, AdamConfig{});
  CHECK(p[0] == 1.0);
  CHECK(p[1] == -2.0);
  CHECK(p[2] == 3.0);
  CHECK(state.step == 1);
}

TEST_CASE("adam with zero betas degenerates to sign-like update") {
  AdamConfig config;
  config.lr = 0.1;
  config.beta1 = 0.0;
  config.beta2 = 0.0;
  config.epsilon = 1e-8;
  Tensor p = Tensor::vector({1.0, 1.0});
  std::vector<Tensor*> params{&p};
  AdamState state{std::span<Tensor* const>(params)};
  const std::vector<Tensor> grads{Tensor::vector({0.5, -2.0})};
  adam_step(std::span<Tensor* const>(params), grads, state, config);
  CHECK(p[0] ==
        doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
  CHECK(p[1] ==
        doctest::Approx(1.0 + 0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam trajectory matches an independent reference loop") {
  // Quadratic objective 0.5 * sum(a_i * (x_i - c_i)^2), gradient a*(x-c).
  const std::vector<double> a{1.0, 4.0, 0.5, 2.5};
  const std::vector<double> c{0.3, -1.2, 2.0, 0.0};

  AdamConfig config;  // library defaults (beta1 = 0.5)
  Tensor p = Tensor::vector({1.0, 1.0, 1.0, 1.0});
  std::vector<Tensor*> params{&p};
  AdamState state{std::span<Tensor* const>(params)};

  ReferenceAdam ref(4, config.lr, config.beta1, config.beta2, config.epsilon);
  std::vector<double> x{1.0, 1.0, 1.0, 1.0};

  for (int step = 0; step < 100; ++step) {
    Tensor g({4});
    std::vector<double> gref(4);
    for (std::size_t i = 0; i < 4; ++i) {
      g[i] = a[i] * (p[i] - c[i]);
      gref[i] = a[i] * (x[i] - c[i]);
    }
    const std::vector<Tensor> grads{g};
    adam_step(std::span<Tensor* const>(params), grads, state, config);
    ref.step(x, gref);
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(p[i] == doctest::Approx(x[i]).epsilon(1e-10));
  }
  CHECK(state.step == 100);
}

TEST_CASE("adam is bitwise deterministic") {
  auto run = [] {
    Rng rng(23);
    Tensor p = random_tensor({8}, rng);
    std::vector<Tensor*> params{&p};
    AdamState state{std::span<Tensor* const>(params)};
    for (int i = 0; i < 10; ++i) {
      const std::vector<Tensor> grads{random_tensor({8}, rng)};
      adam_step(std::span<Tensor* const>(params), grads, state, AdamConfig{});
    }
    return p;
  };
  const Tensor first = run();
  const Tensor second = run();
  CHECK(first.values() == second.values());
}
