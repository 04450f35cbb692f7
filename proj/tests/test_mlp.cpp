#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "partivae/adam.hpp"
#include "partivae/errors.hpp"
#include "partivae/mlp.hpp"
#include "testutil.hpp"

using namespace partivae;
using namespace partivae::nn;
using testutil::fd_param_grads;
using testutil::max_grad_rel_err;

namespace {

MlpParams identity_1x1x1() {
  MlpParams p = MlpParams::zeros(1, 1, 1);
  p.w1(0, 0) = 1.0;
  p.w2(0, 0) = 1.0;
  return p;
}

MlpParams random_net(Index in, Index hidden, Index out, std::uint64_t seed) {
  SplitMix rng(seed);
  return MlpParams::glorot(in, hidden, out, rng, /*zero_output_layer=*/false);
}

}  // namespace

TEST_CASE("selu constants and continuity") {
  CHECK(selu(1.0) == doctest::Approx(kSeluLambda).epsilon(1e-15));
  // negative branch: lambda * alpha * (e^x - 1)
  const double want = kSeluLambda * kSeluAlpha * std::expm1(-1.0);
  CHECK(selu(-1.0) == doctest::Approx(want).epsilon(1e-15));
  CHECK(want == doctest::Approx(-1.1113307).epsilon(1e-6));
  for (double eps : {1e-4, 1e-6, 1e-8})
    CHECK(std::abs(selu(eps) - selu(-eps)) < 3.0 * kSeluLambda * eps);
}

TEST_CASE("forward: zero weights give zero output") {
  MlpParams p = MlpParams::zeros(3, 5, 2);
  Vector in(3);
  in << 0.3, -1.2, 4.0;
  auto [out, tape] = mlp_forward(p, in);
  CHECK(out.norm() == 0.0);
}

TEST_CASE("forward: identity-like 1x1x1 net reproduces selu") {
  MlpParams p = identity_1x1x1();
  Vector in(1);
  in << 1.0;
  auto [out, tape] = mlp_forward(p, in);
  CHECK(out[0] == doctest::Approx(1.0507009873554805).epsilon(1e-12));

  in << -1.0;
  auto [out2, tape2] = mlp_forward(p, Vector(in));
  CHECK(out2[0] == doctest::Approx(kSeluLambda * kSeluAlpha * std::expm1(-1.0)).epsilon(1e-12));
}

TEST_CASE("forward rejects shape mismatch") {
  MlpParams p = MlpParams::zeros(3, 5, 2);
  Vector bad(4);
  bad.setZero();
  CHECK_THROWS_AS((void)mlp_forward(p, bad), DimensionError);
}

TEST_CASE("forward is deterministic") {
  MlpParams p = random_net(4, 8, 3, 7);
  Vector in(4);
  in << 0.1, -0.2, 0.3, 2.0;
  auto [a, t1] = mlp_forward(p, in);
  auto [b, t2] = mlp_forward(p, in);
  CHECK((a - b).norm() == 0.0);
}

TEST_CASE("backward: zero out_grad gives zero gradients") {
  MlpParams p = random_net(4, 8, 3, 11);
  Vector in(4);
  in << 1.0, 2.0, -0.5, 0.25;
  auto [out, tape] = mlp_forward(p, in);
  auto back = mlp_backward(p, tape, Matrix::Zero(3, 1));
  CHECK(back.grads.w1.norm() == 0.0);
  CHECK(back.grads.b2.norm() == 0.0);
  CHECK(back.input_grad.norm() == 0.0);
}

TEST_CASE("backward: single-edge chain rule d(out)/d(w2) = selu(1)") {
  MlpParams p = identity_1x1x1();
  Vector in(1);
  in << 1.0;
  auto [out, tape] = mlp_forward(p, in);
  auto back = mlp_backward(p, tape, Matrix::Ones(1, 1));
  CHECK(back.grads.w2(0, 0) == doctest::Approx(selu(1.0)).epsilon(1e-14));
}

TEST_CASE("backward matches finite differences on a random 4x8x3 net") {
  MlpParams p = random_net(4, 8, 3, 42);
  Vector in(4);
  in << 0.7, -1.1, 0.05, 0.9;
  Vector og(3);
  og << 1.0, -2.0, 0.5;

  auto [out, tape] = mlp_forward(p, in);
  auto back = mlp_backward(p, tape, Matrix(og));

  auto scalar = [&](const MlpParams& q) {
    return og.dot(mlp_forward(q, Matrix(in), nullptr).col(0));
  };
  const MlpParams fd = fd_param_grads(p, scalar, 1e-5);
  CHECK(max_grad_rel_err(back.grads, fd) < 1e-4);

  // input gradient against finite differences too
  for (Index i = 0; i < in.size(); ++i) {
    Vector up = in, dn = in;
    up[i] += 1e-5;
    dn[i] -= 1e-5;
    const double want = (og.dot(mlp_forward(p, Matrix(up), nullptr).col(0)) -
                         og.dot(mlp_forward(p, Matrix(dn), nullptr).col(0))) /
                        2e-5;
    CHECK(testutil::rel_err(back.input_grad(i, 0), want) < 1e-4);
  }
}

TEST_CASE("gradient check across architectures and seeds") {
  struct Arch {
    Index in, hidden, out;
  };
  const Arch archs[] = {{2, 4, 2}, {8, 32, 8}, {16, 64, 16}};
  double worst = 0.0;
  for (const auto& a : archs) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      SplitMix rng(1000 + seed);
      MlpParams p = MlpParams::glorot(a.in, a.hidden, a.out, rng, false);
      Vector in(a.in), og(a.out);
      for (Index i = 0; i < a.in; ++i) in[i] = rng.next_range(-2.0, 2.0);
      for (Index i = 0; i < a.out; ++i) og[i] = rng.next_range(-1.0, 1.0);
      auto [out, tape] = mlp_forward(p, in);
      auto back = mlp_backward(p, tape, Matrix(og));
      auto scalar = [&](const MlpParams& q) {
        return og.dot(mlp_forward(q, Matrix(in), nullptr).col(0));
      };
      const MlpParams fd = fd_param_grads(p, scalar, 1e-5);
      worst = std::max(worst, max_grad_rel_err(back.grads, fd));
    }
  }
  CHECK(worst < 1e-3);
  MESSAGE("worst relative error over 300 nets: ", worst);
}

TEST_CASE("batched forward/backward equals per-column passes") {
  MlpParams p = random_net(3, 6, 2, 5);
  Matrix in(3, 4);
  in << 0.1, 1.0, -2.0, 0.0, 0.5, -0.5, 1.5, 2.0, -1.0, 0.25, 0.75, -0.25;
  Matrix og(2, 4);
  og << 1.0, 0.0, -1.0, 2.0, 0.5, 1.0, 0.0, -2.0;

  GradTape tape;
  Matrix out = mlp_forward(p, in, &tape);
  auto back = mlp_backward(p, tape, og);

  MlpParams acc = MlpParams::zeros(3, 6, 2);
  for (int c = 0; c < 4; ++c) {
    auto [o, t] = mlp_forward(p, Vector(in.col(c)));
    CHECK((o - out.col(c)).norm() < 1e-14);
    auto b = mlp_backward(p, t, Matrix(og.col(c)));
    acc.w1 += b.grads.w1;
    acc.b1 += b.grads.b1;
    acc.w2 += b.grads.w2;
    acc.b2 += b.grads.b2;
    CHECK((b.input_grad.col(0) - back.input_grad.col(c)).norm() < 1e-12);
  }
  CHECK((acc.w1 - back.grads.w1).norm() < 1e-12);
  CHECK((acc.b2 - back.grads.b2).norm() < 1e-12);
}

TEST_CASE("zero-input-dimension nets are constant functions") {
  MlpParams p = MlpParams::zeros(0, 4, 2);
  p.b1 << 1.0, -1.0, 0.5, 0.0;
  p.w2 << 1.0, 2.0, 3.0, 4.0, -1.0, 0.0, 1.0, 0.0;
  p.b2 << 0.25, -0.5;
  Matrix empty_in(0, 3);
  Matrix out = mlp_forward(p, empty_in, nullptr);
  CHECK(out.cols() == 3);
  for (int c = 0; c < 3; ++c) CHECK((out.col(c) - out.col(0)).norm() == 0.0);
  Vector h = p.b1.unaryExpr([](double z) { return selu(z); });
  CHECK((out.col(0) - (p.w2 * h + p.b2)).norm() < 1e-15);
}

TEST_CASE("adam: zero gradients are the identity for any number of steps") {
  MlpParams p = random_net(2, 3, 2, 9);
  const MlpParams before = p;
  AdamState st = AdamState::init(p);
  const MlpParams zero = MlpParams::zeros(2, 3, 2);
  for (int i = 0; i < 25; ++i) adam_step(p, zero, st);
  CHECK(st.step == 25);
  CHECK((p.w1 - before.w1).norm() == 0.0);
  CHECK((p.b1 - before.b1).norm() == 0.0);
  CHECK((p.w2 - before.w2).norm() == 0.0);
  CHECK((p.b2 - before.b2).norm() == 0.0);
}

TEST_CASE("adam: bias-corrected first step moves by ~lr in the gradient direction") {
  MlpParams p = MlpParams::zeros(1, 1, 1);
  AdamState st = AdamState::init(p);
  st.cfg.lr = 1e-3;
  st.cfg.eps = 1e-7;
  MlpParams g = MlpParams::zeros(1, 1, 1);
  g.w1(0, 0) = 0.5;
  adam_step(p, g, st);
  // ascent: m_hat = g, v_hat = g^2 -> step = lr * g/(|g| + eps')
  CHECK(p.w1(0, 0) == doctest::Approx(1e-3).epsilon(1e-3));
  CHECK(p.w1(0, 0) > 0.0);
}

TEST_CASE("adam: two constant-gradient steps match the hand recurrence") {
  const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-7, g = 0.5;
  // oracle: evaluate the Adam recurrence directly
  double m = 0.0, v = 0.0, x = 0.0;
  for (int t = 1; t <= 2; ++t) {
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    x += lr * mh / (std::sqrt(vh) + eps);
  }

  MlpParams p = MlpParams::zeros(1, 1, 1);
  AdamState st = AdamState::init(p);
  MlpParams grad = MlpParams::zeros(1, 1, 1);
  grad.w1(0, 0) = g;
  adam_step(p, grad, st);
  const double first = p.w1(0, 0);
  adam_step(p, grad, st);
  const double second = p.w1(0, 0) - first;
  CHECK(p.w1(0, 0) == doctest::Approx(x).epsilon(1e-12));
  CHECK(std::abs(second) == doctest::Approx(lr).epsilon(0.1));  // within 10% of lr
}

TEST_CASE("adam rejects non-finite gradients with the step index") {
  MlpParams p = MlpParams::zeros(1, 1, 1);
  AdamState st = AdamState::init(p);
  MlpParams g = MlpParams::zeros(1, 1, 1);
  adam_step(p, g, st);
  g.w1(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    adam_step(p, g, st);
    FAIL("expected TrainError");
  } catch (const TrainError& e) {
    CHECK(e.step == 1);
  }
}
