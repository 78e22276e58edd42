#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fedhkd/error.hpp"
#include "fedhkd/loss.hpp"
#include "fedhkd/model.hpp"
#include "fedhkd/rng.hpp"
#include "support/oracles.hpp"

using namespace fedhkd;
using fedhkd::testing::finite_difference;
using fedhkd::testing::max_relative_error;

namespace {

// Fixture: extractor is a bare identity dense layer (no batchnorm), which the
// plain struct allows even though experiment models are stricter.
SplitModel identity_model(std::size_t dim, std::size_t classes, Rng& rng) {
  SplitModel m;
  Layer id = Layer::dense(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) id.weight.at(i, i) = 1.0;
  m.extractor.push_back(std::move(id));
  m.classifier.push_back(Layer::dense_init(dim, classes, rng));
  return m;
}

Tensor random_batch(std::size_t rows, std::size_t dim, Rng& rng) {
  Tensor t({rows, dim});
  for (auto& v : t.values()) v = rng.next_normal();
  return t;
}

}  // namespace

TEST_CASE("identity extractor maps input to itself") {
  Rng rng(1);
  SplitModel m = identity_model(3, 2, rng);
  const Tensor x = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  const Tensor h = extract(m, x);
  CHECK(h.values() == x.values());
}

TEST_CASE("extract output dimension equals configured repr_dim") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t in = 2 + rng.next_below(8);
    const std::size_t hidden = 2 + rng.next_below(12);
    const std::size_t repr = 1 + rng.next_below(8);
    const std::size_t classes = 2 + rng.next_below(6);
    SplitModel m = make_mlp_model(in, hidden, repr, classes, rng);
    CHECK(m.repr_dim() == repr);
    CHECK(m.class_count() == classes);
    const Tensor h = extract(m, random_batch(3, in, rng));
    CHECK(h.rows() == 3);
    CHECK(h.cols() == repr);
  }
}

TEST_CASE("eval-mode extract and classify are bitwise repeatable") {
  Rng rng(3);
  SplitModel m = make_mlp_model(5, 8, 4, 3, rng);
  const Tensor x = random_batch(4, 5, rng);
  const Tensor h1 = extract(m, x);
  const Tensor h2 = extract(m, x);
  CHECK(h1.values() == h2.values());
  const Tensor z1 = classify(m, h1);
  const Tensor z2 = classify(m, h2);
  CHECK(z1.values() == z2.values());
}

TEST_CASE("zero classifier maps to zero logits") {
  Rng rng(4);
  SplitModel m = identity_model(4, 3, rng);
  m.classifier.front() = Layer::dense(4, 3);  // zero weights, zero bias
  const Tensor z = classify(m, random_batch(2, 4, rng));
  for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("classify after extract equals the composed forward pass") {
  Rng rng(5);
  SplitModel m = make_mlp_model(6, 10, 4, 5, rng);
  const Tensor x = random_batch(3, 6, rng);
  const Tensor z_split = classify(m, extract(m, x));

  // Composed pass through the concatenated layer stack.
  std::vector<Layer> all = m.extractor;
  all.insert(all.end(), m.classifier.begin(), m.classifier.end());
  const Tensor z_full = forward_stack(all, x);
  CHECK(z_split.values() == z_full.values());
}

TEST_CASE("classifier gradient matches finite differences") {
  Rng rng(6);
  SplitModel work = identity_model(4, 3, rng);
  const Tensor h = random_batch(5, 4, rng);
  const std::vector<std::size_t> labels{0, 2, 1, 2, 0};

  auto loss_fn = [&] {
    return cross_entropy(softmax(classify(work, h)), labels).loss;
  };

  std::vector<LayerCache> caches;
  const Tensor z = classify_train(work, h, &caches);
  auto [loss, dz] = cross_entropy(softmax(z), labels);
  std::vector<LayerGrads> grads;
  backward_stack(work.classifier, caches, dz, &grads);

  Layer& dense = work.classifier.front();
  CHECK(max_relative_error(grads.front().grads[0],
                           finite_difference(loss_fn, dense.weight)) < 1e-4);
  CHECK(max_relative_error(grads.front().grads[1],
                           finite_difference(loss_fn, dense.bias)) < 1e-4);
}

TEST_CASE("soft target closed forms") {
  // z/T = [ln 2, 0] gives [2/3, 1/3] for any matching (z, T) pair.
  const Tensor q = soft_target(Tensor::vector({3.0 * std::log(2.0), 0.0}), 3.0);
  CHECK(q[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(q[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  // z = [4, 2], T = 2: softmax([2, 1]) = [e, 1] / (e + 1).
  const double e = std::exp(1.0);
  const Tensor q2 = soft_target(Tensor::vector({4.0, 2.0}), 2.0);
  CHECK(q2[0] == doctest::Approx(e / (e + 1.0)).epsilon(1e-12));
  CHECK(q2[1] == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-12));
  CHECK(q2[0] == doctest::Approx(0.731059).epsilon(1e-5));
  CHECK(q2[1] == doctest::Approx(0.268941).epsilon(1e-5));
}

TEST_CASE("large temperature flattens monotonically toward uniform") {
  const Tensor z = Tensor::vector({4.0, 2.0});
  double previous = 1.0;
  for (double t : {1.0, 2.0, 4.0, 8.0, 64.0, 1024.0}) {
    const Tensor q = soft_target(z, t);
    CHECK(q[0] < previous);
    CHECK(q[0] > 0.5);
    previous = q[0];
  }
  CHECK(soft_target(z, 1024.0)[0] == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("soft target rejects nonpositive temperature") {
  CHECK_THROWS_AS(soft_target(Tensor::vector({1.0, 0.0}), 0.0), Error);
  CHECK_THROWS_AS(soft_target(Tensor::vector({1.0, 0.0}), -1.0), Error);
}

TEST_CASE("temperature never changes the predicted class") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.next_below(9);
    Tensor z({n});
    for (auto& v : z.values()) v = rng.next_normal(0.0, 4.0);
    const double t = 0.05 + 10.0 * rng.next_unit();
    const Tensor q = soft_target(z, t);
    CHECK(argmax_row(std::span<const double>(q.values())) ==
          argmax_row(std::span<const double>(z.values())));
    double total = 0.0;
    for (double v : q.values()) total += v;
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("soft target at temperature one equals softmax") {
  Rng rng(8);
  Tensor z({3, 6});
  for (auto& v : z.values()) v = rng.next_normal(0.0, 3.0);
  const Tensor a = soft_target(z, 1.0);
  const Tensor b = softmax(z);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(std::abs(a[i] - b[i]) <= 1e-12);
}

TEST_CASE("clip keeps in-range values and clamps the rest") {
  const Tensor in = Tensor::vector({1.0, -2.5, 5.0, -7.2, 0.0});
  const Tensor out = clip_representation(in, 3.0);
  CHECK(out[0] == 1.0);
  CHECK(out[1] == -2.5);
  CHECK(out[2] == 3.0);
  CHECK(out[3] == -3.0);
  CHECK(out[4] == 0.0);
}

TEST_CASE("clip bound holds exactly for random tensors") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor h({4, 6});
    for (auto& v : h.values()) v = rng.next_normal(0.0, 5.0);
    const double bound = 0.5 + 3.0 * rng.next_unit();
    const Tensor clipped = clip_representation(h, bound);
    for (std::size_t i = 0; i < clipped.size(); ++i) {
      CHECK(std::abs(clipped[i]) <= bound);
      if (std::abs(h[i]) <= bound) CHECK(clipped[i] == h[i]);
    }
  }
  CHECK_THROWS_AS(clip_representation(Tensor({2}), 0.0), Error);
}

TEST_CASE("experiment model validation") {
  Rng rng(10);
  SplitModel good = make_mlp_model(4, 6, 3, 2, rng);
  CHECK_NOTHROW(validate_experiment_model(good));

  SplitModel no_bn = identity_model(4, 2, rng);
  CHECK_THROWS_AS(validate_experiment_model(no_bn), Error);
}
