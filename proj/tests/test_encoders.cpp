#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "coconet/encoders.hpp"
#include "coconet/gradcheck.hpp"
#include "coconet/ops.hpp"
#include "coconet/rng.hpp"

using namespace coconet;

namespace {

Tensor random_rows(std::size_t n, std::size_t d, Rng& rng) {
  std::vector<double> v(n * d);
  for (auto& x : v) x = rng.uniform(-1.5, 1.5);
  return Tensor(Shape{n, d}, std::move(v), false);
}

enc::EncoderConfig small_config(std::size_t views, std::size_t in_dim, std::size_t c1 = 64,
                                std::size_t c2 = 32, std::size_t hw = 4) {
  enc::EncoderConfig cfg;
  cfg.view_dims.assign(views, in_dim);
  cfg.c1 = c1;
  cfg.c2 = c2;
  cfg.map_h = hw;
  cfg.map_w = hw;
  cfg.hidden_omega = 24;
  cfg.hidden_theta = 24;
  return cfg;
}

double row_norm(const Tensor& t, std::size_t row) {
  double sq = 0.0;
  for (std::size_t j = 0; j < t.dim(1); ++j) {
    sq += t.values()[row * t.dim(1) + j] * t.values()[row * t.dim(1) + j];
  }
  return std::sqrt(sq);
}

}  // namespace

TEST_CASE("encode_view shapes and unit norms") {
  Rng rng(3);
  enc::EncoderStack stack(small_config(1, 10), rng);
  Tensor x = random_rows(2, 10, rng);
  auto e = stack.encode_view(0, x);
  CHECK(e.z.shape() == Shape{2, 4 * 4 * 32});
  CHECK(e.h.shape() == Shape{2, 64});
  for (std::size_t i = 0; i < 2; ++i) CHECK(row_norm(e.h, i) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("identical inputs produce identical rows") {
  Rng rng(5);
  enc::EncoderStack stack(small_config(1, 6, 16, 8, 2), rng);
  Tensor one = random_rows(1, 6, rng);
  std::vector<double> dup = one.values();
  dup.insert(dup.end(), one.values().begin(), one.values().end());
  auto e = stack.encode_view(0, Tensor(Shape{2, 6}, dup, false));
  for (std::size_t j = 0; j < e.h.dim(1); ++j) {
    CHECK(e.h.values()[j] == e.h.values()[e.h.dim(1) + j]);
  }
}

TEST_CASE("dimension mismatch names the view") {
  Rng rng(5);
  enc::EncoderStack stack(small_config(2, 6, 16, 8, 2), rng);
  CHECK_THROWS_WITH_AS(stack.encode_view(1, random_rows(2, 7, rng)), doctest::Contains("view 1"),
                       std::invalid_argument);
}

TEST_CASE("fusion shapes match the channel accounting") {
  Rng rng(9);
  // M=3, C1=64, C2=32, h=w=4 -> fused cells carry M*(C1+C2) = 288 channels
  enc::EncoderStack stack(small_config(3, 12), rng);
  std::vector<Tensor> views{random_rows(2, 12, rng), random_rows(2, 12, rng),
                            random_rows(2, 12, rng)};
  auto pack = stack.encode_batch(views);
  CHECK(pack.syncretic_h.shape() == Shape{2, 3 * 64});
  CHECK(pack.syncretic_z.shape() == Shape{2, 16 * 3 * 32});
  CHECK(pack.fused.shape() == Shape{2, 16 * 288});
  CHECK(pack.cf.shape() == Shape{2, 64});
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(row_norm(pack.cf, i) == doctest::Approx(1.0).epsilon(1e-9));
  }

  // the syncretic map interleaves per cell: (s, m, c) <- view m cell s
  const std::size_t c2 = 32, hw = 16;
  for (std::size_t s = 0; s < hw; ++s) {
    for (std::size_t m = 0; m < 3; ++m) {
      for (std::size_t c = 0; c < c2; c += 7) {
        CHECK(pack.syncretic_z.values()[s * 3 * c2 + m * c2 + c] ==
              pack.z[m].values()[s * c2 + c]);
      }
    }
  }
  // the fused embedding tiles the syncretic vector at every cell
  const std::size_t cell_w = 3 * (64 + 32);
  for (std::size_t s = 0; s < hw; s += 5) {
    for (std::size_t j = 0; j < 3 * 64; j += 11) {
      CHECK(pack.fused.values()[s * cell_w + j] == pack.syncretic_h.values()[j]);
    }
  }
}

TEST_CASE("single-view fusion degenerates to tiling one view") {
  Rng rng(13);
  enc::EncoderStack stack(small_config(1, 5, 8, 4, 2), rng);
  auto pack = stack.encode_batch({random_rows(3, 5, rng)});
  CHECK(pack.fused.shape() == Shape{3, 4 * (8 + 4)});
  CHECK(pack.cf.shape() == Shape{3, 8});
}

TEST_CASE("feature pack shape identities hold across configurations") {
  Rng rng(17);
  const std::size_t cases[][4] = {{2, 8, 4, 2}, {3, 16, 8, 3}, {4, 6, 2, 1}};
  for (const auto& c : cases) {
    const std::size_t M = c[0], c1 = c[1], c2 = c[2], hw_side = c[3];
    enc::EncoderConfig cfg;
    cfg.view_dims.assign(M, 7);
    cfg.c1 = c1;
    cfg.c2 = c2;
    cfg.map_h = hw_side;
    cfg.map_w = hw_side;
    cfg.hidden_omega = 12;
    cfg.hidden_theta = 12;
    enc::EncoderStack stack(cfg, rng);
    std::vector<Tensor> views;
    for (std::size_t m = 0; m < M; ++m) views.push_back(random_rows(4, 7, rng));
    auto pack = stack.encode_batch(views);
    const std::size_t hw = hw_side * hw_side;
    CHECK(pack.syncretic_h.shape() == Shape{4, M * c1});
    CHECK(pack.syncretic_z.shape() == Shape{4, hw * M * c2});
    CHECK(pack.fused.shape() == Shape{4, hw * M * (c1 + c2)});
    CHECK(pack.cf.shape() == Shape{4, c1});
  }
}

TEST_CASE("permuting batch rows permutes all outputs identically") {
  Rng rng(23);
  enc::EncoderStack stack(small_config(2, 6, 16, 8, 2), rng);
  Tensor a = random_rows(4, 6, rng);
  Tensor b = random_rows(4, 6, rng);
  auto pack = stack.encode_batch({a, b});

  const std::vector<std::size_t> perm{2, 0, 3, 1};
  auto pa = ops::gather_rows(a, perm);
  auto pb = ops::gather_rows(b, perm);
  auto permuted = stack.encode_batch({pa, pb});

  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 16; ++j) {
      CHECK(permuted.cf.values()[i * 16 + j] == pack.cf.values()[perm[i] * 16 + j]);
      CHECK(permuted.h[1].values()[i * 16 + j] == pack.h[1].values()[perm[i] * 16 + j]);
    }
  }
}

TEST_CASE("outputs stay finite for degenerate inputs") {
  Rng rng(29);
  enc::EncoderStack stack(small_config(2, 5, 8, 4, 2), rng);
  Tensor zeros = Tensor::zeros({3, 5});
  auto pack = stack.encode_batch({zeros, zeros});
  for (double v : pack.cf.values()) CHECK(std::isfinite(v));
  for (double v : pack.h[0].values()) CHECK(std::isfinite(v));
}

TEST_CASE("the factor depends on every extractor's parameters") {
  Rng rng(31);
  enc::EncoderStack stack(small_config(3, 5, 8, 4, 2), rng);
  std::vector<Tensor> views{random_rows(6, 5, rng), random_rows(6, 5, rng),
                            random_rows(6, 5, rng)};

  ParamGroup omega = stack.omega_params();
  {
    Tape tape;
    TapeScope scope(tape);
    auto pack = stack.encode_batch(views);
    Tensor target = ops::sum(ops::mul(pack.cf, pack.cf));
    tape.backward(target);
  }
  for (auto& p : omega) {
    REQUIRE(p.tensor.has_grad());
    double max_abs = 0.0;
    for (double g : p.tensor.grad()) max_abs = std::max(max_abs, std::fabs(g));
    INFO("parameter " << p.name);
    CHECK(max_abs > 0.0);
    p.tensor.zero_grad();
  }

  // finite-difference spot check through the full fusion pipeline
  auto report = gradcheck::compare(
      [&] {
        auto pack = stack.encode_batch(views);
        return ops::sum(ops::mul(pack.cf, pack.cf));
      },
      {{omega[0].name, omega[0].tensor}, {omega[2].name, omega[2].tensor}});
  CHECK(report.max_rel_err < 1e-4);
}
