#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "danet/nn_core.hpp"
#include "oracles.hpp"

using namespace danet;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.v) v = scale * rng.uniform(-1.0, 1.0);
  return t;
}

// FD check of d loss / d params for loss = mse(layer(x), target)
void check_layer_gradients(Layer& layer, const Tensor& x, double tol = 1e-4) {
  Rng rng(99);
  const Tensor out0 = layer.forward(x);
  const Tensor target = random_tensor(out0.shape, rng);

  auto loss = [&]() { return mse_loss(layer.forward(x), target); };

  for (Parameter* p : layer.params()) p->zero_grad();
  const Tensor out = layer.forward(x);
  layer.backward(mse_grad(out, target));

  std::vector<double*> values;
  std::vector<double> analytic;
  for (Parameter* p : layer.params()) {
    for (std::size_t i = 0; i < p->value.v.size(); ++i) {
      values.push_back(&p->value.v[i]);
      analytic.push_back(p->grad.v[i]);
    }
  }
  const auto fd = oracles::finite_difference_check(values, analytic, loss);
  CHECK(fd.max_rel_err < tol);

  // input gradient via a fresh forward/backward + FD on x
  Tensor xm = x;
  auto loss_x = [&]() { return mse_loss(layer.forward(xm), target); };
  for (Parameter* p : layer.params()) p->zero_grad();
  const Tensor dx = layer.backward(mse_grad(layer.forward(xm), target));
  std::vector<double*> xvals;
  std::vector<double> xgrad;
  for (std::size_t i = 0; i < xm.size(); ++i) {
    xvals.push_back(&xm.v[i]);
    xgrad.push_back(dx.v[i]);
  }
  const auto fdx = oracles::finite_difference_check(xvals, xgrad, loss_x);
  CHECK(fdx.max_rel_err < tol);
}

}  // namespace

TEST_CASE("conv1d: k=1 identity") {
  Rng rng(1);
  Conv1d conv(1, 1, 1, 1, rng);
  // set w=1, b=0
  conv.params()[0]->value.v = {1.0};
  conv.params()[1]->value.v = {0.0};
  Tensor x = Tensor::zeros({1, 5});
  x.v = {1, 2, 3, 4, 5};
  const Tensor y = conv.forward(x);
  CHECK(y.v == x.v);
}

TEST_CASE("conv1d: dilated hand-computed example") {
  // x=[0,0,1,0,0], k=3, d=2, w=[1,2,3], b=0 -> y=[3,0,2,0,1]
  Rng rng(1);
  Conv1d conv(1, 1, 3, 2, rng);
  conv.params()[0]->value.v = {1.0, 2.0, 3.0};
  conv.params()[1]->value.v = {0.0};
  Tensor x = Tensor::zeros({1, 5});
  x.v = {0, 0, 1, 0, 0};
  const Tensor y = conv.forward(x);
  const std::vector<double> expect = {3, 0, 2, 0, 1};
  CHECK(y.v == expect);
}

TEST_CASE("conv1d: receptive span arithmetic") {
  CHECK(1 + (9 - 1) * 7 == 57);
}

TEST_CASE("conv1d: translation covariance in the interior") {
  Rng rng(2);
  Conv1d conv(1, 1, 5, 2, rng);
  Tensor x = random_tensor({1, 64}, rng);
  const Tensor y = conv.forward(x);

  Tensor xs = Tensor::zeros({1, 64});  // x shifted right by 3
  for (std::size_t t = 3; t < 64; ++t) xs.v[t] = x.v[t - 3];
  const Tensor ys = conv.forward(xs);
  // interior frames away from both boundaries by the kernel span
  for (std::size_t t = 16; t < 48; ++t) {
    CHECK(ys.v[t + 3] == doctest::Approx(y.v[t + 3 - 3]).epsilon(1e-12));
  }
}

TEST_CASE("conv1d linearity in x") {
  Rng rng(3);
  Conv1d conv(2, 3, 7, 3, rng);
  const Tensor x1 = random_tensor({2, 40}, rng);
  const Tensor x2 = random_tensor({2, 40}, rng);
  Tensor mix = x1;
  for (std::size_t i = 0; i < mix.size(); ++i) mix.v[i] = 1.5 * x1.v[i] - 0.7 * x2.v[i];

  // subtract bias contribution to test the linear part
  Tensor zero = Tensor::zeros({2, 40});
  const Tensor b = conv.forward(zero);
  const Tensor y1 = conv.forward(x1);
  const Tensor y2 = conv.forward(x2);
  const Tensor ym = conv.forward(mix);
  for (std::size_t i = 0; i < ym.size(); ++i) {
    const double lin = 1.5 * (y1.v[i] - b.v[i]) - 0.7 * (y2.v[i] - b.v[i]) + b.v[i];
    CHECK(ym.v[i] == doctest::Approx(lin).epsilon(1e-9));
  }
}

TEST_CASE("conv1d rejects even kernels and bad shapes") {
  Rng rng(4);
  CHECK_THROWS_AS(Conv1d(1, 1, 4, 1, rng), ConfigError);
  Conv1d conv(2, 1, 3, 1, rng);
  CHECK_THROWS_AS(conv.forward(random_tensor({3, 10}, rng)), ShapeError);
}

TEST_CASE("maxpool: floor shape, values, argmax routing") {
  MaxPool1d pool(7);
  Tensor x = Tensor::zeros({1, 1500});
  const Tensor y = pool.forward(x);
  CHECK(y.frames() == 214);

  MaxPool1d p1(1);
  Tensor a = Tensor::zeros({1, 4});
  a.v = {1, 5, 2, 4};
  CHECK(p1.forward(a).v == a.v);

  MaxPool1d p2(2);
  const Tensor b = p2.forward(a);
  CHECK(b.v == std::vector<double>{5, 4});

  // gradient routes only to argmax positions
  Tensor dy = Tensor::zeros({1, 2});
  dy.v = {1.0, 2.0};
  const Tensor dx = p2.backward(dy);
  CHECK(dx.v == std::vector<double>{0, 1, 0, 2});

  MaxPool1d big(10);
  CHECK_THROWS_AS(big.forward(a), ShapeError);
}

TEST_CASE("dense: identity, zero weights, hand matmul") {
  Rng rng(5);
  Dense d(3, 3, rng);
  auto params = d.params();
  // identity W, zero b
  params[0]->value.v = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  params[1]->value.v = {0, 0, 0};
  Tensor x = Tensor::vec({2.0, -1.0, 0.5});
  CHECK(d.forward(x).v == x.v);

  params[0]->value.v = {0, 0, 0, 0, 0, 0, 0, 0, 0};
  params[1]->value.v = {3, 4, 5};
  CHECK(d.forward(x).v == std::vector<double>{3, 4, 5});

  Dense d32(2, 3, rng);
  auto p32 = d32.params();
  p32[0]->value.v = {1, 2, 3, 4, 5, 6};  // rows: [1,2],[3,4],[5,6]
  p32[1]->value.v = {0.5, -0.5, 0.0};
  Tensor u = Tensor::vec({2.0, -1.0});
  const Tensor y = d32.forward(u);
  CHECK(y.v[0] == doctest::Approx(1 * 2 + 2 * -1 + 0.5));
  CHECK(y.v[1] == doctest::Approx(3 * 2 + 4 * -1 - 0.5));
  CHECK(y.v[2] == doctest::Approx(5 * 2 + 6 * -1 + 0.0));
}

TEST_CASE("activations: relu and stable sigmoid") {
  ReLU relu;
  Tensor x = Tensor::vec({-1.0, 0.0, 2.0});
  CHECK(relu.forward(x).v == std::vector<double>{0, 0, 2});

  CHECK(stable_sigmoid(0.0) == doctest::Approx(0.5));
  CHECK(stable_sigmoid(-800.0) > 0.0);
  CHECK(std::isfinite(stable_sigmoid(-800.0)));
  CHECK(std::isfinite(stable_sigmoid(800.0)));
  CHECK(stable_sigmoid(800.0) <= 1.0);
}

TEST_CASE("losses: bce and mse values") {
  CHECK(bce_loss(0.5, 1.0) == doctest::Approx(std::log(2.0)));
  CHECK(bce_loss(0.9, 1.0) == doctest::Approx(0.10536051565782628).epsilon(1e-10));
  Tensor a = Tensor::vec({1.0, 2.0, 3.0});
  CHECK(mse_loss(a, a) == 0.0);
  Tensor b = Tensor::vec({0.0, 0.0, 0.0});
  CHECK(mse_loss(a, b) == doctest::Approx((1.0 + 4.0 + 9.0) / 3.0));
  // bce stays finite after clamping
  CHECK(std::isfinite(bce_loss(0.0, 1.0)));
  CHECK(std::isfinite(bce_loss(1.0, 0.0)));
}

TEST_CASE("bce minimized at p == y over a grid") {
  for (double y : {0.0, 1.0}) {
    const double at_y = bce_loss(y, y);
    for (double p = 0.05; p < 1.0; p += 0.05) {
      CHECK(bce_loss(p, y) >= at_y);
    }
  }
}

TEST_CASE("mse gradient is 2(x-c)/N") {
  Tensor x = Tensor::vec({1.0, -2.0, 4.0});
  Tensor c = Tensor::vec({0.5, 0.5, 0.5});
  const Tensor g = mse_grad(x, c);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(g.v[i] == doctest::Approx(2.0 * (x.v[i] - c.v[i]) / 3.0));
  }
}

TEST_CASE("backward without forward raises StateError") {
  Rng rng(6);
  Conv1d conv(1, 1, 3, 1, rng);
  Tensor dy = Tensor::zeros({1, 4});
  CHECK_THROWS_AS(conv.backward(dy), StateError);
  Dense dense(2, 2, rng);
  CHECK_THROWS_AS(dense.backward(Tensor::vec({1, 2})), StateError);
}

TEST_CASE("finite-difference gradients: every layer type") {
  Rng rng(7);
  SUBCASE("conv1d plain") {
    Conv1d conv(2, 3, 5, 1, rng);
    check_layer_gradients(conv, random_tensor({2, 20}, rng));
  }
  SUBCASE("conv1d dilated") {
    Conv1d conv(1, 2, 9, 7, rng);
    check_layer_gradients(conv, random_tensor({1, 80}, rng));
  }
  SUBCASE("dense") {
    Dense dense(6, 4, rng);
    check_layer_gradients(dense, random_tensor({6}, rng));
  }
  SUBCASE("sequential conv-relu-pool-flatten-dense") {
    Sequential net;
    net.add<Conv1d>(1, 2, 5, 1, rng);
    net.add<ReLU>();
    net.add<MaxPool1d>(3);
    net.add<Flatten>();
    net.add<Dense>(2 * 8, 3, rng);
    check_layer_gradients(net, random_tensor({1, 24}, rng));
  }
  SUBCASE("residual block with projection") {
    auto body = std::make_unique<Sequential>();
    body->add<Conv1d>(1, 3, 3, 2, rng);
    body->add<ReLU>();
    body->add<Conv1d>(3, 3, 3, 2, rng);
    auto proj = std::make_unique<Conv1d>(1, 3, 1, 1, rng);
    ResidualBlock block(std::move(body), std::move(proj));
    check_layer_gradients(block, random_tensor({1, 16}, rng));
  }
  SUBCASE("sigmoid head") {
    Sequential net;
    net.add<Dense>(4, 1, rng);
    net.add<Sigmoid>();
    check_layer_gradients(net, random_tensor({4}, rng));
  }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Parameter p(Tensor::vec({1.0, 2.0}));
  Adam opt;
  p.zero_grad();
  opt.step({&p});
  CHECK(p.value.v == std::vector<double>{1.0, 2.0});
}

TEST_CASE("adam: first step magnitude with g=1 is lr (bias correction cancels)") {
  Parameter p(Tensor::vec({0.0}));
  Adam opt(1e-3, 0.9, 0.999, 1e-7);
  p.grad.v = {1.0};
  opt.step({&p});
  // m_hat = v_hat = 1 at t=1, so delta = -lr / (1 + eps)
  CHECK(p.value.v[0] == doctest::Approx(-1e-3 / (1.0 + 1e-7)).epsilon(1e-12));
}

TEST_CASE("adam: frozen parameter with nonzero gradient is untouched") {
  Parameter p(Tensor::vec({7.0}));
  p.trainable = false;
  p.grad.v = {5.0};
  Adam opt;
  opt.step({&p});
  opt.step({&p});
  CHECK(p.value.v[0] == 7.0);
}

TEST_CASE("adam state reset and determinism") {
  auto run = [](int steps) {
    Parameter p(Tensor::vec({1.0}));
    Adam opt(1e-2);
    for (int i = 0; i < steps; ++i) {
      p.grad.v = {p.value.v[0]};  // gradient of 0.5 x^2
      opt.step({&p});
    }
    return p.value.v[0];
  };
  CHECK(run(25) == run(25));   // bit-identical
  CHECK(run(25) < run(5));     // loss decreases with more steps
  CHECK(run(25) > 0.0);
}
