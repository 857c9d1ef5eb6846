#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "coconet/color.hpp"
#include "coconet/data.hpp"
#include "coconet/rng.hpp"

using namespace coconet;

namespace {

// Independent re-derivation of the sRGB -> L*a*b* chain for cross-checking:
// same published constants, rational CIE breakpoint form, explicit
// matrix-vector helper instead of unrolled arithmetic.
std::array<double, 3> reference_rgb_to_lab(double r, double g, double b) {
  auto invert_companding = [](double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  const std::array<double, 3> lin = {invert_companding(r), invert_companding(g),
                                     invert_companding(b)};
  const std::array<std::array<double, 3>, 3> m = {{{0.4124564, 0.3575761, 0.1804375},
                                                   {0.2126729, 0.7151522, 0.0721750},
                                                   {0.0193339, 0.1191920, 0.9503041}}};
  std::array<double, 3> xyz{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) xyz[i] += m[i][j] * lin[j];
  }
  const std::array<double, 3> white = {0.95047, 1.0, 1.08883};
  auto f = [](double t) {
    const double eps = 216.0 / 24389.0;
    const double kappa = 24389.0 / 27.0;
    return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
  };
  const double fx = f(xyz[0] / white[0]);
  const double fy = f(xyz[1] / white[1]);
  const double fz = f(xyz[2] / white[2]);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

std::string temp_path(const char* name) {
  return std::string("data_test_") + name;
}

}  // namespace

TEST_CASE("white and black map to the Lab reference points") {
  const auto white = color::rgb_to_lab(1.0, 1.0, 1.0);
  CHECK(white[0] == doctest::Approx(100.0).epsilon(1e-5));
  CHECK(std::fabs(white[1]) < 1e-3);
  CHECK(std::fabs(white[2]) < 1e-3);

  const auto black = color::rgb_to_lab(0.0, 0.0, 0.0);
  CHECK(std::fabs(black[0]) < 1e-12);
  CHECK(std::fabs(black[1]) < 1e-12);
  CHECK(std::fabs(black[2]) < 1e-12);
}

TEST_CASE("out-of-range channels are rejected") {
  CHECK_THROWS_AS(color::rgb_to_lab(1.2, 0.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(color::rgb_to_lab(0.0, -0.1, 0.0), std::domain_error);
}

TEST_CASE("color pipeline agrees with the re-derived formula chain") {
  const auto red = color::rgb_to_lab(1.0, 0.0, 0.0);
  const auto red_ref = reference_rgb_to_lab(1.0, 0.0, 0.0);
  for (int i = 0; i < 3; ++i) CHECK(red[i] == doctest::Approx(red_ref[i]).epsilon(1e-12));

  Rng rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    const double r = rng.next_double(), g = rng.next_double(), b = rng.next_double();
    const auto got = color::rgb_to_lab(r, g, b);
    const auto want = reference_rgb_to_lab(r, g, b);
    for (int i = 0; i < 3; ++i) CHECK(std::fabs(got[i] - want[i]) < 1e-9);
  }
}

TEST_CASE("split_views produces aligned rgb/l/ab views with the right dims") {
  Rng rng(7);
  std::vector<std::vector<double>> images;
  for (int i = 0; i < 2; ++i) {
    std::vector<double> img(48);
    for (auto& v : img) v = rng.next_double();
    images.push_back(img);
  }
  auto ds = data::split_views(images, 4, 4);
  REQUIRE(ds.num_views() == 3);
  CHECK(ds.views[0].dim == 48);
  CHECK(ds.views[1].dim == 16);
  CHECK(ds.views[2].dim == 32);
  CHECK(ds.views[0].name == "rgb");

  // row alignment: the rgb view holds the source image verbatim
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 48; ++j) CHECK(ds.row(0, i)[j] == images[i][j]);
  }
  // and the L/ab rows match the per-pixel conversion of that same image
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t p = 0; p < 16; ++p) {
      const auto lab = color::rgb_to_lab(images[i][p], images[i][16 + p], images[i][32 + p]);
      CHECK(ds.row(1, i)[p] == doctest::Approx(lab[0] / 100.0).epsilon(1e-12));
      CHECK(ds.row(2, i)[p] == doctest::Approx(lab[1] / 128.0).epsilon(1e-12));
      CHECK(ds.row(2, i)[16 + p] == doctest::Approx(lab[2] / 128.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("all-white batch gives L* = 100 before normalization") {
  std::vector<std::vector<double>> images(3, std::vector<double>(3 * 4, 1.0));
  auto ds = data::split_views(images, 2, 2);
  for (double v : ds.view_data[1]) CHECK(v == doctest::Approx(1.0).epsilon(1e-7));  // 100 / 100
}

TEST_CASE("split_views rejects non-3-channel input") {
  std::vector<std::vector<double>> bad{std::vector<double>(17, 0.5)};
  CHECK_THROWS_AS(data::split_views(bad, 2, 2), std::invalid_argument);
}

TEST_CASE("identity-map zero-noise synth reproduces the latent in every view") {
  data::SynthSpec spec;
  spec.latent_dim = 4;
  spec.classes = 2;
  spec.num_views = 3;
  spec.noise_scale = 0.0;
  spec.identity_maps = true;
  spec.nonlinearity = "none";
  spec.seed = 11;
  auto ds = data::synth_generate(spec, 10);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t m = 1; m < 3; ++m) {
      for (std::size_t j = 0; j < 4; ++j) CHECK(ds.row(m, i)[j] == ds.row(0, i)[j]);
    }
  }
}

TEST_CASE("labels are balanced within one") {
  data::SynthSpec spec;
  spec.classes = 2;
  auto ds = data::synth_generate(spec, 1000);
  std::size_t ones = 0;
  for (auto label : ds.labels) ones += label;
  CHECK(ones == 500);

  auto odd = data::synth_generate(spec, 1001);
  std::size_t zeros = 0;
  for (auto label : odd.labels) zeros += label == 0 ? 1 : 0;
  CHECK(zeros == 501);
}

TEST_CASE("synth generation is a pure function of spec and count") {
  data::SynthSpec spec;
  spec.seed = 99;
  auto a = data::synth_generate(spec, 64);
  auto b = data::synth_generate(spec, 64);
  CHECK(a.view_data == b.view_data);
  CHECK(a.labels == b.labels);
}

TEST_CASE("cifar loader reads handcrafted records and rejects truncation") {
  const std::string path = temp_path("cifar.bin");
  {
    std::ofstream out(path, std::ios::binary);
    std::vector<unsigned char> record(3073, 0);
    record[0] = 7;  // label
    record[1] = 255;
    record[3072] = 128;
    out.write(reinterpret_cast<char*>(record.data()), record.size());
    record[0] = 2;
    out.write(reinterpret_cast<char*>(record.data()), record.size());
  }
  auto batch = data::load_cifar_binary(path);
  REQUIRE(batch.images.size() == 2);
  CHECK(batch.labels[0] == 7);
  CHECK(batch.labels[1] == 2);
  CHECK(batch.images[0][0] == doctest::Approx(1.0));
  CHECK(batch.images[0][3071] == doctest::Approx(128.0 / 255.0));
  for (double v : batch.images[1]) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out.write("xx", 2);  // stray bytes
  }
  CHECK_THROWS_WITH_AS(data::load_cifar_binary(path), doctest::Contains("3073"),
                       std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("minibatches: drop-last schedule, determinism, alignment") {
  data::SynthSpec spec;
  spec.classes = 2;
  spec.num_views = 2;
  spec.seed = 5;
  auto ds = data::synth_generate(spec, 10);
  data::Minibatcher mb(ds, 3, 123);
  CHECK(mb.batches_per_epoch() == 3);

  // every sample exactly once per epoch, short batch dropped
  std::vector<bool> seen(10, false);
  std::size_t emitted = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    auto batch = mb.batch(0, b);
    for (std::size_t id : batch.ids) {
      CHECK_FALSE(seen[id]);
      seen[id] = true;
      ++emitted;
    }
  }
  CHECK(emitted == 9);

  // same seed, same order
  data::Minibatcher mb2(ds, 3, 123);
  for (std::size_t b = 0; b < 3; ++b) CHECK(mb.batch(1, b).ids == mb2.batch(1, b).ids);

  // view alignment: row i in every view belongs to ids[i]
  auto batch = mb.batch(4, 1);
  for (std::size_t i = 0; i < batch.ids.size(); ++i) {
    for (std::size_t m = 0; m < ds.num_views(); ++m) {
      const double* want = ds.row(m, batch.ids[i]);
      for (std::size_t j = 0; j < ds.views[m].dim; ++j) {
        CHECK(batch.views[m][i * ds.views[m].dim + j] == want[j]);
      }
    }
  }

  CHECK_THROWS_AS(data::Minibatcher(ds, 11, 0), std::invalid_argument);
}

TEST_CASE("mvds files round-trip and reject bad magic") {
  data::SynthSpec spec;
  spec.num_views = 2;
  spec.view_dims = {5, 3};
  spec.latent_dim = 3;
  spec.seed = 31;
  auto ds = data::synth_generate(spec, 12);
  const std::string path = temp_path("roundtrip.mvds");
  data::save_mvds(ds, path);
  auto loaded = data::load_mvds(path);
  CHECK(loaded.num_samples == 12);
  CHECK(loaded.view_data == ds.view_data);
  CHECK(loaded.labels == ds.labels);
  CHECK(loaded.views[0].dim == 5);
  CHECK(loaded.views[1].dim == 3);

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_WITH_AS(data::load_mvds(path), doctest::Contains("magic"), std::runtime_error);
  std::remove(path.c_str());
}
