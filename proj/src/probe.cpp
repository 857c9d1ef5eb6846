#include "coconet/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "coconet/nn.hpp"
#include "coconet/ops.hpp"
#include "coconet/optim.hpp"
#include "coconet/rng.hpp"

namespace coconet::probe {

namespace o = coconet::ops;

FeatureMatrix extract_features(enc::EncoderStack& encoders, const data::MultiViewDataset& dataset,
                               std::size_t chunk) {
  dataset.validate();
  const auto& cfg = encoders.config();
  if (cfg.num_views() != dataset.num_views()) {
    throw std::invalid_argument("extract_features: view count mismatch");
  }
  for (std::size_t m = 0; m < cfg.num_views(); ++m) {
    if (cfg.view_dims[m] != dataset.views[m].dim) {
      throw std::invalid_argument("extract_features: view '" + dataset.views[m].name +
                                  "' width differs from the trained encoder");
    }
  }

  FeatureMatrix out;
  out.count = dataset.num_samples;
  out.dim = cfg.num_views() * cfg.c1;
  out.values.resize(out.count * out.dim);
  out.labels = dataset.labels;

  for (std::size_t start = 0; start < out.count; start += chunk) {
    const std::size_t n = std::min(chunk, out.count - start);
    for (std::size_t m = 0; m < cfg.num_views(); ++m) {
      const std::size_t d = dataset.views[m].dim;
      std::vector<double> rows(n * d);
      std::copy(dataset.view_data[m].begin() + start * d,
                dataset.view_data[m].begin() + (start + n) * d, rows.begin());
      Tensor h = encoders.encode_view(m, Tensor(Shape{n, d}, std::move(rows), false)).h;
      for (std::size_t i = 0; i < n; ++i) {
        std::copy(h.values().begin() + i * cfg.c1, h.values().begin() + (i + 1) * cfg.c1,
                  out.values.begin() + (start + i) * out.dim + m * cfg.c1);
      }
    }
  }
  return out;
}

void ProbeConfig::validate() const {
  if (kind != "linear" && kind != "mlp") {
    throw std::invalid_argument("probe: kind must be linear or mlp");
  }
  if (epochs == 0 || window == 0 || window > epochs) {
    throw std::invalid_argument("probe: need 1 <= window <= epochs");
  }
  if (!(lr > 0.0)) throw std::invalid_argument("probe: learning rate must be positive");
}

namespace {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

Split split_80_20(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(seed);
  rng.shuffle(ids);
  const std::size_t cut = (n * 8) / 10;
  Split split;
  split.train.assign(ids.begin(), ids.begin() + cut);
  split.test.assign(ids.begin() + cut, ids.end());
  return split;
}

struct EpochEval {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_f1;
};

EpochEval evaluate(const std::vector<std::size_t>& predictions,
                   const std::vector<std::uint32_t>& truth, std::size_t classes) {
  EpochEval eval;
  std::vector<std::size_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const std::size_t pred = predictions[i];
    const std::size_t gold = truth[i];
    if (pred == gold) {
      ++correct;
      ++tp[gold];
    } else {
      ++fp[pred];
      ++fn[gold];
    }
  }
  eval.accuracy = static_cast<double>(correct) / static_cast<double>(predictions.size());
  eval.per_class_f1.resize(classes, 0.0);
  double sum = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    eval.per_class_f1[c] = denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
    sum += eval.per_class_f1[c];
  }
  eval.macro_f1 = sum / static_cast<double>(classes);
  return eval;
}

Tensor gather_matrix(const FeatureMatrix& features, const std::vector<std::size_t>& ids) {
  std::vector<double> rows(ids.size() * features.dim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::copy(features.row(ids[i]), features.row(ids[i]) + features.dim,
              rows.begin() + i * features.dim);
  }
  return Tensor(Shape{ids.size(), features.dim}, std::move(rows), false);
}

}  // namespace

ProbeResult probe_train_eval(const FeatureMatrix& features, const ProbeConfig& config,
                             std::uint64_t split_seed) {
  config.validate();
  if (features.labels.size() != features.count || features.count < 5) {
    throw std::invalid_argument("probe: need labeled features (at least 5 samples)");
  }
  const std::size_t classes =
      1 + static_cast<std::size_t>(*std::max_element(features.labels.begin(),
                                                     features.labels.end()));
  if (classes < 2) throw std::invalid_argument("probe: need at least two classes");

  const Split split = split_80_20(features.count, split_seed);
  Tensor x_train = gather_matrix(features, split.train);
  Tensor x_test = gather_matrix(features, split.test);
  std::vector<std::size_t> y_train(split.train.size());
  std::vector<std::uint32_t> y_test(split.test.size());
  for (std::size_t i = 0; i < split.train.size(); ++i) y_train[i] = features.labels[split.train[i]];
  for (std::size_t i = 0; i < split.test.size(); ++i) y_test[i] = features.labels[split.test[i]];

  Rng rng(split_seed ^ 0x5EEDF00DULL);
  nn::Mlp classifier;
  if (config.kind == "linear") {
    classifier = nn::Mlp({features.dim, classes}, rng);
  } else {
    classifier = nn::Mlp({features.dim, config.hidden, classes}, rng);
  }
  ParamGroup params;
  classifier.collect(params, "probe");
  Optimizer opt(OptimizerKind::Sgd, config.lr);

  std::vector<EpochEval> evals;
  evals.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    {
      Tape tape;
      TapeScope scope(tape);
      Tensor loss = o::softmax_cross_entropy(classifier.forward(x_train), y_train);
      tape.backward(loss);
    }
    opt.step(params);

    Tensor logits = classifier.forward(x_test);
    std::vector<std::size_t> predictions(split.test.size());
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      const double* row = logits.values().data() + i * classes;
      predictions[i] =
          static_cast<std::size_t>(std::max_element(row, row + classes) - row);
    }
    evals.push_back(evaluate(predictions, y_test, classes));
  }

  ProbeResult result;
  result.per_class_f1.assign(classes, 0.0);
  const std::size_t from = config.epochs - config.window;
  for (std::size_t e = from; e < config.epochs; ++e) {
    result.accuracy += evals[e].accuracy;
    result.macro_f1 += evals[e].macro_f1;
    for (std::size_t c = 0; c < classes; ++c) result.per_class_f1[c] += evals[e].per_class_f1[c];
  }
  const double inv = 1.0 / static_cast<double>(config.window);
  result.accuracy *= inv;
  result.macro_f1 *= inv;
  for (auto& f1 : result.per_class_f1) f1 *= inv;
  return result;
}

std::vector<std::vector<std::size_t>> knn_retrieve(const FeatureMatrix& features,
                                                   const std::vector<std::size_t>& query_ids,
                                                   std::size_t k) {
  if (k == 0 || k >= features.count) {
    throw std::invalid_argument("knn: need 1 <= K < sample count");
  }
  std::vector<std::vector<std::size_t>> out;
  out.reserve(query_ids.size());
  for (std::size_t q : query_ids) {
    if (q >= features.count) throw std::out_of_range("knn: query id out of range");
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(features.count - 1);
    for (std::size_t j = 0; j < features.count; ++j) {
      if (j == q) continue;
      double l1 = 0.0;
      const double* a = features.row(q);
      const double* b = features.row(j);
      for (std::size_t d = 0; d < features.dim; ++d) l1 += std::fabs(a[d] - b[d]);
      dist.emplace_back(l1, j);
    }
    std::sort(dist.begin(), dist.end());  // pair ordering breaks ties by smaller id
    std::vector<std::size_t> neighbors(k);
    for (std::size_t i = 0; i < k; ++i) neighbors[i] = dist[i].second;
    out.push_back(std::move(neighbors));
  }
  return out;
}

}  // namespace coconet::probe
