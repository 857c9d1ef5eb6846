#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "coconet/gradcheck.hpp"
#include "coconet/nn.hpp"
#include "coconet/ops.hpp"
#include "coconet/optim.hpp"
#include "coconet/rng.hpp"
#include "coconet/tensor.hpp"

using namespace coconet;
namespace o = coconet::ops;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0,
                     bool requires_grad = true) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

}  // namespace

TEST_CASE("matmul forward shape and values") {
  Tensor a(Shape{2, 3}, {1, 0, 0, 0, 1, 0});
  Tensor b(Shape{3, 1}, {5, 7, 9});
  Tensor c = o::matmul(a, b);
  CHECK(c.shape() == Shape{2, 1});
  CHECK(c.values()[0] == 5.0);
  CHECK(c.values()[1] == 7.0);
  CHECK_THROWS_AS(o::matmul(a, Tensor(Shape{2, 2}, {1, 2, 3, 4})), std::invalid_argument);
}

TEST_CASE("l2 normalize of (3,4) gives (0.6, 0.8)") {
  Tensor x = Tensor::row_vector({3.0, 4.0});
  Tensor y = o::l2_normalize(x);
  CHECK(y.values()[0] == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(y.values()[1] == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("gather with identity permutation is the identity") {
  Rng rng(7);
  Tensor x = random_tensor({4, 3}, rng);
  Tensor y = o::gather_rows(x, {0, 1, 2, 3});
  CHECK(y.values() == x.values());
  Tensor z = o::gather_cols(x, {0, 1, 2});
  CHECK(z.values() == x.values());
}

TEST_CASE("backward of sum(x*x) doubles the input") {
  Tensor x = Tensor::row_vector({1, 2, 3}, true);
  Tape tape;
  TapeScope scope(tape);
  Tensor loss = o::sum(o::mul(x, x));
  tape.backward(loss);
  CHECK(x.grad() == std::vector<double>{2, 4, 6});
}

TEST_CASE("loss independent of a leaf leaves its grad at zero") {
  Tensor x = Tensor::row_vector({1, 2}, true);
  Tensor y = Tensor::row_vector({3, 4}, true);
  Tape tape;
  TapeScope scope(tape);
  Tensor loss = o::sum(o::mul(x, x));
  (void)y;
  tape.backward(loss);
  CHECK_FALSE(y.has_grad());
}

TEST_CASE("backward requires a scalar loss and a nonempty tape") {
  Tensor x = Tensor::row_vector({1, 2}, true);
  Tape tape;
  {
    TapeScope scope(tape);
    Tensor y = o::mul(x, x);
    CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
  }
  Tape empty;
  CHECK_THROWS_AS(empty.backward(Tensor::scalar(1.0)), std::logic_error);
}

TEST_CASE("every primitive matches central finite differences") {
  Rng rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Tensor a = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({4, 2}, rng);
    Tensor c = random_tensor({3, 4}, rng);
    Tensor d = random_tensor({4}, rng);
    Tensor pos = random_tensor({3, 4}, rng, 0.5, 2.5);

    auto check = [&](const char* tag, const std::function<Tensor()>& f,
                     std::vector<std::pair<std::string, Tensor>> leaves) {
      auto report = gradcheck::compare(f, std::move(leaves));
      INFO(tag << " worst at " << report.worst);
      CHECK(report.max_rel_err < 1e-5);
      worst = std::max(worst, report.max_rel_err);
    };

    check("matmul", [&] { return o::sum(o::matmul(a, b)); }, {{"a", a}, {"b", b}});
    check("add", [&] { return o::sum(o::mul(o::add(a, c), a)); }, {{"a", a}, {"c", c}});
    check("add_rowvec", [&] { return o::sum(o::mul(o::add(a, d), a)); }, {{"a", a}, {"d", d}});
    check("sub", [&] { return o::sum(o::mul(o::sub(a, c), c)); }, {{"a", a}, {"c", c}});
    check("mul", [&] { return o::sum(o::mul(a, c)); }, {{"a", a}, {"c", c}});
    check("mul_rowvec", [&] { return o::sum(o::mul(a, d)); }, {{"a", a}, {"d", d}});
    check("div", [&] { return o::sum(o::div(a, pos)); }, {{"a", a}, {"pos", pos}});
    check("exp", [&] { return o::sum(o::exp(a)); }, {{"a", a}});
    check("log", [&] { return o::sum(o::log(pos)); }, {{"pos", pos}});
    check("relu", [&] { return o::sum(o::relu(a)); }, {{"a", a}});
    check("abs", [&] { return o::sum(o::abs(a)); }, {{"a", a}});
    check("pow", [&] { return o::sum(o::pow(pos, 1.7)); }, {{"pos", pos}});
    check("mean", [&] { return o::mean(a); }, {{"a", a}});
    check("sum_axis0", [&] { return o::sum(o::mul(o::sum_axis(a, 0), d)); }, {{"a", a}, {"d", d}});
    check("mean_axis1", [&] { return o::sum(o::pow(o::add_scalar(o::mean_axis(a, 1), 3.0), 2.0)); },
          {{"a", a}});
    check("concat0", [&] { return o::sum(o::mul(o::concat({a, c}, 0), o::concat({c, a}, 0))); },
          {{"a", a}, {"c", c}});
    check("concat1", [&] { return o::sum(o::pow(o::concat({a, c}, 1), 2.0)); },
          {{"a", a}, {"c", c}});
    check("reshape", [&] { return o::sum(o::mul(o::reshape(a, {4, 3}), o::reshape(c, {4, 3}))); },
          {{"a", a}, {"c", c}});
    check("transpose", [&] { return o::sum(o::matmul(o::transpose(a), a)); }, {{"a", a}});
    check("gather_rows", [&] { return o::sum(o::pow(o::gather_rows(a, {2, 0, 0, 1}), 2.0)); },
          {{"a", a}});
    check("gather_cols", [&] { return o::sum(o::pow(o::gather_cols(a, {3, 1, 1}), 2.0)); },
          {{"a", a}});
    check("l2_normalize", [&] { return o::sum(o::mul(o::l2_normalize(a), c)); }, {{"a", a}});
    check("softmax_xent", [&] { return o::softmax_cross_entropy(a, {0, 3, 1}); }, {{"a", a}});
    check("mul_scalar", [&] { return o::sum(o::mul_scalar(a, -1.25)); }, {{"a", a}});
  }
  MESSAGE("max primitive rel err over 20 trials: " << worst);
}

TEST_CASE("gather/permute backward scatters through the recorded permutation") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor x = random_tensor({6, 2}, rng);
    std::vector<std::size_t> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<std::size_t> inverse(6);
    for (std::size_t i = 0; i < 6; ++i) inverse[perm[i]] = i;

    Tensor weights = random_tensor({6, 2}, rng, -1, 1, false);
    Tape tape;
    TapeScope scope(tape);
    Tensor y = o::gather_rows(o::gather_rows(x, perm), inverse);
    Tensor loss = o::sum(o::mul(y, weights));
    tape.backward(loss);
    // permute then un-permute: gradient equals the plain weight pattern
    for (std::size_t i = 0; i < x.numel(); ++i) {
      CHECK(x.grad()[i] == doctest::Approx(weights.values()[i]).epsilon(1e-12));
    }
    x.zero_grad();
  }
}

TEST_CASE("identical seed and op sequence reproduces bit-identical tensors") {
  auto run = [] {
    Rng rng(99);
    Tensor a = random_tensor({5, 5}, rng);
    Tensor b = random_tensor({5, 5}, rng);
    Tape tape;
    TapeScope scope(tape);
    Tensor y = o::l2_normalize(o::relu(o::matmul(a, b)));
    Tensor loss = o::mean(o::pow(o::abs(y), 2.0));
    tape.backward(loss);
    auto out = a.grad();
    auto vals = y.values();
    out.insert(out.end(), vals.begin(), vals.end());
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("domain errors name the op") {
  Tensor x = Tensor::row_vector({1.0, -1.0});
  CHECK_THROWS_WITH_AS(o::log(x), doctest::Contains("log"), std::domain_error);
  Tensor zero = Tensor::row_vector({1.0, 0.0});
  CHECK_THROWS_AS(o::div(x, zero), std::domain_error);
  CHECK_THROWS_AS(o::pow(x, 0.5), std::domain_error);
}

TEST_CASE("sgd step is exact") {
  Tensor p = Tensor::scalar(1.0, true);
  p.grad_buffer()[0] = 2.0;
  ParamGroup group{{"p", p}};
  Optimizer opt(OptimizerKind::Sgd, 0.1);
  opt.step(group);
  CHECK(p.value() == doctest::Approx(0.8).epsilon(1e-15));

  // lr = 0 leaves parameters unchanged
  Tensor q = Tensor::scalar(3.5, true);
  q.grad_buffer()[0] = 7.0;
  ParamGroup g2{{"q", q}};
  Optimizer zero(OptimizerKind::Sgd, 0.0);
  zero.step(g2);
  CHECK(q.value() == 3.5);
}

TEST_CASE("missing gradient errors name the parameter") {
  Tensor p = Tensor::scalar(1.0, true);
  ParamGroup group{{"theta/W", p}};
  Optimizer opt(OptimizerKind::Sgd, 0.1);
  CHECK_THROWS_WITH_AS(opt.step(group), doctest::Contains("theta/W"), std::logic_error);
}

TEST_CASE("adam first step matches the hand-unrolled update") {
  // With g = 1 everywhere: m_hat = 1, v_hat = 1, so the update is
  // lr * 1 / (1 + eps).
  const double lr = 0.05;
  Tensor p(Shape{3}, {1.0, -2.0, 0.25}, true);
  auto& g = p.grad_buffer();
  for (auto& v : g) v = 1.0;
  ParamGroup group{{"p", p}};
  Optimizer opt(OptimizerKind::Adam, lr);
  opt.step(group);
  const double expected_delta = lr * 1.0 / (1.0 + 1e-8);
  CHECK(p.values()[0] == doctest::Approx(1.0 - expected_delta).epsilon(1e-14));
  CHECK(p.values()[1] == doctest::Approx(-2.0 - expected_delta).epsilon(1e-14));
  CHECK(p.values()[2] == doctest::Approx(0.25 - expected_delta).epsilon(1e-14));
}

TEST_CASE("composite loss through an mlp matches finite differences") {
  Rng rng(21);
  nn::Mlp net({3, 5, 2}, rng);
  Tensor x = random_tensor({4, 3}, rng, -1, 1, false);
  std::vector<std::pair<std::string, Tensor>> leaves;
  ParamGroup params;
  net.collect(params, "net");
  for (auto& p : params) leaves.emplace_back(p.name, p.tensor);
  auto report = gradcheck::compare(
      [&] { return o::mean(o::pow(o::l2_normalize(net.forward(x)), 2.0)); }, leaves);
  CHECK(report.max_rel_err < 1e-5);
}
