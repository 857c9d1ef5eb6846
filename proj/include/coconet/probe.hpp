#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coconet/data.hpp"
#include "coconet/encoders.hpp"

namespace coconet::probe {

struct FeatureMatrix {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<double> values;  // count x dim row-major
  std::vector<std::uint32_t> labels;

  const double* row(std::size_t i) const { return values.data() + i * dim; }
};

// Frozen features: every view's high-level vector, concatenated in view
// order, so the width is M*C1 and each per-view block keeps unit norm.
FeatureMatrix extract_features(enc::EncoderStack& encoders, const data::MultiViewDataset& dataset,
                               std::size_t chunk = 256);

struct ProbeConfig {
  std::string kind = "linear";  // linear | mlp
  std::size_t epochs = 120;
  double lr = 0.5;
  std::size_t window = 10;  // trailing epochs averaged into the result
  std::size_t hidden = 64;  // mlp probe width

  void validate() const;
};

struct ProbeResult {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_f1;
};

// Softmax classifier on frozen features over a seeded 80/20 split; reports
// top-1 accuracy and macro F1 averaged over the trailing window of epochs.
ProbeResult probe_train_eval(const FeatureMatrix& features, const ProbeConfig& config,
                             std::uint64_t split_seed);

// K nearest neighbors by L1 distance, query excluded, ties broken by the
// smaller id.
std::vector<std::vector<std::size_t>> knn_retrieve(const FeatureMatrix& features,
                                                   const std::vector<std::size_t>& query_ids,
                                                   std::size_t k);

}  // namespace coconet::probe
