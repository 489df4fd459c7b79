#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hbf/neural.hpp"
#include "hbf/oracles.hpp"

using namespace hbf;

namespace {

RVector random_vector(int n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  RVector v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

MlpParams zero_net(const std::array<int, 4>& dims) {
  Rng rng(0);
  MlpParams p = make_mlp(dims, rng);
  for (auto& w : p.weights) w.setZero();
  for (auto& b : p.biases) b.setZero();
  return p;
}

}  // namespace

TEST_CASE("zero network outputs zero") {
  MlpParams p = zero_net({3, 5, 4, 2});
  Rng rng(1);
  RVector out = forward(p, random_vector(3, rng));
  CHECK(out.norm() == doctest::Approx(0.0));
}

TEST_CASE("single-unit relu-free path equals tanh(w x)") {
  MlpParams p = zero_net({1, 1, 1, 1});
  for (auto& w : p.weights) w(0, 0) = 1.0;
  RVector x(1);
  x << 0.5;
  RVector out = forward(p, x);
  CHECK(out(0) == doctest::Approx(std::tanh(0.5)).epsilon(1e-9));
  CHECK(out(0) == doctest::Approx(0.462117).epsilon(1e-4));
}

TEST_CASE("outputs live in (-1, 1) and forward is deterministic") {
  Rng rng(2);
  MlpParams p = make_mlp({6, 8, 8, 3}, rng);
  RVector x = random_vector(6, rng, -3.0, 3.0);
  RVector a = forward(p, x);
  RVector b = forward(p, x);
  for (int i = 0; i < 3; ++i) {
    CHECK(a(i) > -1.0);
    CHECK(a(i) < 1.0);
    CHECK(a(i) == b(i));
  }
}

TEST_CASE("batched forward equals independent calls") {
  Rng rng(3);
  MlpParams p = make_mlp({4, 6, 5, 2}, rng);
  RMatrix xs(4, 2);
  xs.col(0) = random_vector(4, rng);
  xs.col(1) = random_vector(4, rng);
  RMatrix out = forward(p, xs);
  CHECK((out.col(0) - forward(p, RVector(xs.col(0)))).norm() == doctest::Approx(0.0));
  CHECK((out.col(1) - forward(p, RVector(xs.col(1)))).norm() == doctest::Approx(0.0));
}

TEST_CASE("forward rejects wrong input length") {
  Rng rng(4);
  MlpParams p = make_mlp({4, 6, 5, 2}, rng);
  CHECK_THROWS_AS(forward(p, random_vector(5, rng)), ContractViolation);
}

TEST_CASE("zero cotangent gives zero gradients") {
  Rng rng(5);
  MlpParams p = make_mlp({4, 3, 3, 2}, rng);
  GradientSet g = backward(p, random_vector(4, rng), RVector::Zero(2));
  CHECK(g.global_norm() == doctest::Approx(0.0));
}

TEST_CASE("backward matches central finite differences on 8-4-4-2 nets") {
  Rng rng(6);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    MlpParams p = make_mlp({8, 4, 4, 2}, rng);
    RVector x = random_vector(8, rng);
    RVector cot = random_vector(2, rng);
    GradientSet exact = backward(p, x, cot);
    GradientSet fd = oracles::finite_difference_gradients(
        p, [&](const MlpParams& q) { return cot.dot(forward(q, x)); });
    worst = std::max(worst, oracles::max_relative_gradient_error(exact, fd));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("input gradient matches finite differences") {
  Rng rng(7);
  MlpParams p = make_mlp({5, 4, 4, 3}, rng);
  RVector x = random_vector(5, rng);
  RVector cot = random_vector(3, rng);
  RVector input_grad;
  backward(p, x, cot, &input_grad);
  for (int i = 0; i < 5; ++i) {
    RVector xp = x, xm = x;
    xp(i) += 1e-6;
    xm(i) -= 1e-6;
    double fd = (cot.dot(forward(p, xp)) - cot.dot(forward(p, xm))) / 2e-6;
    CHECK(input_grad(i) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("relu subgradient at zero is zero") {
  MlpParams p = zero_net({1, 1, 1, 1});
  // zero weights: every pre-activation is exactly 0, so all gradients vanish
  RVector cot(1);
  cot << 1.0;
  RVector x(1);
  x << 1.0;
  GradientSet g = backward(p, x, cot);
  // output layer bias still receives tanh'(0) = 1 times the cotangent
  CHECK(g.d_biases[3](0) == doctest::Approx(1.0));
  // everything upstream is cut off by relu'(0) = 0
  CHECK(g.d_weights[0].norm() == doctest::Approx(0.0));
  CHECK(g.d_biases[0].norm() == doctest::Approx(0.0));
}

TEST_CASE("sgd step identities") {
  Rng rng(8);
  MlpParams p = make_mlp({3, 3, 3, 1}, rng);
  MlpParams before = p;

  GradientSet zero = zero_gradients(p);
  sgd_step(p, zero, 0.1);
  for (int l = 0; l < 4; ++l)
    CHECK((p.weights[static_cast<std::size_t>(l)] - before.weights[static_cast<std::size_t>(l)]).norm() ==
          doctest::Approx(0.0));

  // lr=1 with grad=params zeroes the parameters
  GradientSet g = zero_gradients(p);
  for (int l = 0; l < 4; ++l) {
    g.d_weights[static_cast<std::size_t>(l)] = p.weights[static_cast<std::size_t>(l)];
    g.d_biases[static_cast<std::size_t>(l)] = p.biases[static_cast<std::size_t>(l)];
  }
  MlpParams zeroed = p;
  sgd_step(zeroed, g, 1.0);
  for (int l = 0; l < 4; ++l) CHECK(zeroed.weights[static_cast<std::size_t>(l)].norm() == doctest::Approx(0.0));

  // two half-lr steps on fixed grads equal one full-lr step
  MlpParams two_steps = p;
  sgd_step(two_steps, g, 0.05);
  sgd_step(two_steps, g, 0.05);
  MlpParams one_step = p;
  sgd_step(one_step, g, 0.1);
  for (int l = 0; l < 4; ++l)
    CHECK((two_steps.weights[static_cast<std::size_t>(l)] - one_step.weights[static_cast<std::size_t>(l)])
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("sgd rejects non-finite gradients") {
  Rng rng(9);
  MlpParams p = make_mlp({2, 2, 2, 1}, rng);
  GradientSet g = zero_gradients(p);
  g.d_weights[1](0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sgd_step(p, g, 0.1), DivergenceError);
}

TEST_CASE("soft update endpoints and paper tau") {
  Rng rng(10);
  MlpParams online = make_mlp({2, 3, 3, 1}, rng);
  MlpParams target = make_mlp({2, 3, 3, 1}, rng);

  MlpParams t1 = target;
  soft_update(t1, online, 1.0);
  for (int l = 0; l < 4; ++l)
    CHECK((t1.weights[static_cast<std::size_t>(l)] - online.weights[static_cast<std::size_t>(l)]).norm() ==
          doctest::Approx(0.0));

  MlpParams t0 = target;
  soft_update(t0, online, 0.0);
  for (int l = 0; l < 4; ++l)
    CHECK((t0.weights[static_cast<std::size_t>(l)] - target.weights[static_cast<std::size_t>(l)]).norm() ==
          doctest::Approx(0.0));

  // scalar check with the reference value tau = 1e-3: 0 <- 0.001*1
  MlpParams one = zero_net({1, 1, 1, 1});
  for (auto& w : one.weights) w.setOnes();
  for (auto& b : one.biases) b.setOnes();
  MlpParams zero = zero_net({1, 1, 1, 1});
  soft_update(zero, one, 1e-3);
  CHECK(zero.weights[0](0, 0) == doctest::Approx(0.001));

  // contraction invariant: ||t_new - o|| = (1 - tau) * ||t_old - o|| elementwise
  MlpParams t = target;
  soft_update(t, online, 0.25);
  for (int l = 0; l < 4; ++l) {
    RMatrix lhs = (t.weights[static_cast<std::size_t>(l)] - online.weights[static_cast<std::size_t>(l)]).cwiseAbs();
    RMatrix rhs = 0.75 * (target.weights[static_cast<std::size_t>(l)] -
                          online.weights[static_cast<std::size_t>(l)]).cwiseAbs();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("gradient clipping caps the global norm") {
  Rng rng(11);
  MlpParams p = make_mlp({3, 4, 4, 2}, rng);
  GradientSet g = zero_gradients(p);
  g.d_weights[0].setConstant(10.0);
  double before = g.global_norm();
  CHECK(before > 1.0);
  clip_global_norm(g, 1.0);
  CHECK(g.global_norm() == doctest::Approx(1.0).epsilon(1e-12));
  // already-small gradients pass through untouched
  GradientSet small = zero_gradients(p);
  small.d_biases[2](0) = 0.5;
  clip_global_norm(small, 1.0);
  CHECK(small.d_biases[2](0) == doctest::Approx(0.5));
}

TEST_CASE("checkpoint json round trip preserves parameters") {
  Rng rng(12);
  MlpParams p = make_mlp({4, 5, 6, 2}, rng);
  nlohmann::json j = checkpoint_to_json(p, 777, 42);
  CHECK(j.at("seed").get<std::uint64_t>() == 777);
  CHECK(j.at("step").get<std::uint64_t>() == 42);
  MlpParams back = mlp_from_json(j);
  CHECK(back.same_shape(p));
  for (int l = 0; l < 4; ++l) {
    CHECK((back.weights[static_cast<std::size_t>(l)] - p.weights[static_cast<std::size_t>(l)]).norm() ==
          doctest::Approx(0.0));
    CHECK((back.biases[static_cast<std::size_t>(l)] - p.biases[static_cast<std::size_t>(l)]).norm() ==
          doctest::Approx(0.0));
  }
}

TEST_CASE("initialization respects the fan-in bound") {
  Rng rng(13);
  MlpParams p = make_mlp({9, 4, 4, 1}, rng);
  for (int l = 0; l < 4; ++l) {
    double bound = 1.0 / std::sqrt(double(p.fan_in(l)));
    CHECK(p.weights[static_cast<std::size_t>(l)].cwiseAbs().maxCoeff() <= bound);
    CHECK(p.biases[static_cast<std::size_t>(l)].cwiseAbs().maxCoeff() <= bound);
  }
}
