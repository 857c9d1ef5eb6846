#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "coconet/probe.hpp"
#include "coconet/rng.hpp"
#include "coconet/trainer.hpp"

using namespace coconet;

namespace {

probe::FeatureMatrix separable_features(std::size_t n, std::size_t dim, double margin,
                                        std::uint64_t seed) {
  probe::FeatureMatrix f;
  f.count = n;
  f.dim = dim;
  f.values.resize(n * dim);
  f.labels.resize(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t label = i % 2;
    f.labels[i] = label;
    for (std::size_t j = 0; j < dim; ++j) {
      f.values[i * dim + j] = rng.normal() + (j == 0 ? (label ? margin : -margin) : 0.0);
    }
  }
  return f;
}

}  // namespace

TEST_CASE("extract_features concatenates per-view unit blocks") {
  data::SynthSpec sspec;
  sspec.num_views = 3;
  sspec.view_dims = {6, 6, 6};
  sspec.latent_dim = 4;
  sspec.seed = 3;
  auto dataset = data::synth_generate(sspec, 20);

  Rng rng(5);
  enc::EncoderConfig ec;
  ec.view_dims = {6, 6, 6};
  ec.c1 = 64;
  ec.c2 = 8;
  ec.map_h = 2;
  ec.map_w = 2;
  ec.hidden_omega = 16;
  ec.hidden_theta = 16;
  enc::EncoderStack stack(ec, rng);

  auto f = probe::extract_features(stack, dataset, 7);  // uneven chunking on purpose
  CHECK(f.dim == 3 * 64);
  CHECK(f.count == 20);
  for (std::size_t i = 0; i < f.count; ++i) {
    for (std::size_t m = 0; m < 3; ++m) {
      double sq = 0.0;
      for (std::size_t j = 0; j < 64; ++j) {
        sq += f.row(i)[m * 64 + j] * f.row(i)[m * 64 + j];
      }
      CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  auto again = probe::extract_features(stack, dataset, 20);
  CHECK(f.values == again.values);
}

TEST_CASE("probe separates well-separated classes and flatlines on shuffled labels") {
  probe::FeatureMatrix f = separable_features(400, 8, 6.0, 11);
  probe::ProbeConfig config;
  config.epochs = 60;
  config.window = 10;
  auto result = probe::probe_train_eval(f, config, 21);
  CHECK(result.accuracy >= 0.99);
  CHECK(result.macro_f1 >= 0.99);

  // shuffled labels: chance level within 5 points on this fixed seed
  Rng rng(13);
  rng.shuffle(f.labels);
  auto chance = probe::probe_train_eval(f, config, 21);
  CHECK(std::fabs(chance.accuracy - 0.5) < 0.05);
}

TEST_CASE("probe is deterministic per features and seed") {
  probe::FeatureMatrix f = separable_features(120, 5, 1.0, 17);
  probe::ProbeConfig config;
  config.epochs = 30;
  config.window = 5;
  auto a = probe::probe_train_eval(f, config, 3);
  auto b = probe::probe_train_eval(f, config, 3);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.macro_f1 == b.macro_f1);
  CHECK(a.per_class_f1 == b.per_class_f1);
}

TEST_CASE("mlp probe runs and stays within range") {
  probe::FeatureMatrix f = separable_features(150, 6, 3.0, 19);
  probe::ProbeConfig config;
  config.kind = "mlp";
  config.hidden = 16;
  config.epochs = 40;
  config.window = 8;
  auto result = probe::probe_train_eval(f, config, 5);
  CHECK(result.accuracy >= 0.9);
  CHECK(result.macro_f1 >= 0.0);
  CHECK(result.macro_f1 <= 1.0);
}

TEST_CASE("probe rejects degenerate inputs") {
  probe::FeatureMatrix f = separable_features(50, 4, 1.0, 23);
  std::fill(f.labels.begin(), f.labels.end(), 0);  // single class
  probe::ProbeConfig config;
  CHECK_THROWS_AS(probe::probe_train_eval(f, config, 1), std::invalid_argument);

  probe::ProbeConfig bad;
  bad.window = bad.epochs + 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("raw synthetic views are probe-separable (dataset sanity oracle)") {
  data::SynthSpec spec;  // defaults: strong class separation
  spec.seed = 2;
  auto dataset = data::synth_generate(spec, 400);
  probe::FeatureMatrix f;
  f.count = dataset.num_samples;
  f.dim = dataset.views[0].dim;
  f.values = dataset.view_data[0];
  f.labels = dataset.labels;
  probe::ProbeConfig config;
  config.epochs = 80;
  config.window = 10;
  auto result = probe::probe_train_eval(f, config, 9);
  CHECK(result.accuracy >= 0.95);
}

TEST_CASE("knn retrieval follows L1 geometry") {
  probe::FeatureMatrix f;
  f.count = 5;
  f.dim = 1;
  f.values = {0.0, 10.0, 1.5, -2.0, 0.4};
  f.labels = {};

  // hand-computed L1 ranking from query 0: ids by distance 4(0.4), 2(1.5), 3(2), 1(10)
  auto res = probe::knn_retrieve(f, {0}, 4);
  CHECK(res[0] == std::vector<std::size_t>{4, 2, 3, 1});

  // duplicated sample: its twin is the first neighbor at distance zero
  probe::FeatureMatrix dup;
  dup.count = 4;
  dup.dim = 2;
  dup.values = {1, 1, 5, 5, 1, 1, -3, 0};
  auto res2 = probe::knn_retrieve(dup, {0}, 1);
  CHECK(res2[0][0] == 2);

  // ties break toward the smaller id
  probe::FeatureMatrix tie;
  tie.count = 3;
  tie.dim = 1;
  tie.values = {0.0, 1.0, -1.0};
  auto res3 = probe::knn_retrieve(tie, {0}, 2);
  CHECK(res3[0] == std::vector<std::size_t>{1, 2});

  CHECK_THROWS_AS(probe::knn_retrieve(f, {0}, 5), std::invalid_argument);
}

TEST_CASE("knn ordering is invariant to feature-dimension permutations") {
  Rng rng(31);
  probe::FeatureMatrix f;
  f.count = 12;
  f.dim = 6;
  f.values.resize(72);
  for (auto& v : f.values) v = rng.uniform(-2, 2);
  auto base = probe::knn_retrieve(f, {0, 5, 11}, 4);

  // swap feature columns 1 and 4 everywhere
  probe::FeatureMatrix swapped = f;
  for (std::size_t i = 0; i < f.count; ++i) {
    std::swap(swapped.values[i * 6 + 1], swapped.values[i * 6 + 4]);
  }
  CHECK(probe::knn_retrieve(swapped, {0, 5, 11}, 4) == base);
}
