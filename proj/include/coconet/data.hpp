#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coconet/rng.hpp"

namespace coconet::data {

struct ViewSpec {
  std::string name;  // rgb | l | ab | synthetic-<k>
  std::size_t dim = 0;
};

// Aligned multi-view sample collection; row i of every view belongs to
// sample id i. Labels are optional and used by probes only.
struct MultiViewDataset {
  std::vector<ViewSpec> views;
  std::vector<std::vector<double>> view_data;  // per view, N x dim row-major
  std::vector<std::uint32_t> labels;           // empty or length N
  std::size_t num_samples = 0;

  std::size_t num_views() const { return views.size(); }
  bool has_labels() const { return !labels.empty(); }
  const double* row(std::size_t view, std::size_t i) const {
    return view_data[view].data() + i * views[view].dim;
  }
  void validate() const;
};

struct MultiViewBatch {
  std::vector<std::size_t> ids;
  std::vector<std::vector<double>> views;  // per view, n x dim row-major
  std::size_t size() const { return ids.size(); }
};

struct SynthSpec {
  std::size_t latent_dim = 16;
  std::size_t classes = 2;
  std::size_t num_views = 3;
  std::vector<std::size_t> view_dims;  // empty -> every view gets latent_dim
  double shared_scale = 4.0;           // class-center spread (the shared signal)
  double within_scale = 1.0;           // per-sample latent spread around its center
  double noise_scale = 0.1;            // independent per-view observation noise
  bool identity_maps = false;          // requires view dims == latent_dim
  std::string nonlinearity = "tanh";   // none | tanh
  std::uint64_t seed = 1;
};

// Class-conditioned latent draws pushed through per-view (nonlinear) maps
// plus independent per-view noise. Pure function of (spec, n). With zero
// noise and duplicate latents the views repeat verbatim; that degenerate
// case is allowed.
MultiViewDataset synth_generate(const SynthSpec& spec, std::size_t n);

// Splits channel-plane-major RGB images (R plane, G plane, B plane, each
// height*width values in [0,1]) into the RGB / L / ab views. L is scaled by
// 1/100, ab by 1/128 so inputs stay O(1).
MultiViewDataset split_views(const std::vector<std::vector<double>>& images, std::size_t height,
                             std::size_t width, std::vector<std::uint32_t> labels = {});

struct CifarBatch {
  std::vector<std::vector<double>> images;  // 3072 values in [0,1], plane-major
  std::vector<std::uint32_t> labels;
};

// Reads a CIFAR-10 binary batch file: records of 1 label byte followed by
// 3072 pixel bytes (R, G, B planes of a 32x32 image). Throws a format error
// with the offending offset if the file length is not a multiple of 3073.
CifarBatch load_cifar_binary(const std::string& path);

// Seeded epoch shuffles with drop-last batching. The batch at (epoch, index)
// is a pure function of (dataset, batch_size, seed), so iteration state
// never needs serializing.
class Minibatcher {
 public:
  Minibatcher(const MultiViewDataset& dataset, std::size_t batch_size, std::uint64_t seed);

  std::size_t batches_per_epoch() const { return dataset_->num_samples / batch_size_; }
  MultiViewBatch batch(std::uint64_t epoch, std::size_t index) const;
  std::vector<std::size_t> epoch_order(std::uint64_t epoch) const;

 private:
  const MultiViewDataset* dataset_;
  std::size_t batch_size_;
  std::uint64_t seed_;
};

// Flat binary dataset container: magic "MVDS0001", then u64 counts
// (views M, samples N, label count, per-view dims), per-view f64 arrays,
// and u32 labels, all little-endian.
void save_mvds(const MultiViewDataset& dataset, const std::string& path);
MultiViewDataset load_mvds(const std::string& path);

}  // namespace coconet::data
