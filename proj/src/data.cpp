#include "coconet/data.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "coconet/color.hpp"
#include "coconet/io.hpp"

namespace coconet::data {

void MultiViewDataset::validate() const {
  if (views.size() != view_data.size()) {
    throw std::logic_error("dataset: view spec/data count mismatch");
  }
  for (std::size_t m = 0; m < views.size(); ++m) {
    if (view_data[m].size() != num_samples * views[m].dim) {
      throw std::logic_error("dataset: view '" + views[m].name + "' has " +
                             std::to_string(view_data[m].size()) + " values, expected " +
                             std::to_string(num_samples * views[m].dim));
    }
  }
  if (!labels.empty() && labels.size() != num_samples) {
    throw std::logic_error("dataset: label count does not match sample count");
  }
}

MultiViewDataset synth_generate(const SynthSpec& spec, std::size_t n) {
  if (spec.classes == 0 || n < spec.classes) {
    throw std::invalid_argument("synth_generate: need at least one sample per class");
  }
  if (spec.num_views == 0) throw std::invalid_argument("synth_generate: need at least one view");
  if (spec.nonlinearity != "none" && spec.nonlinearity != "tanh") {
    throw std::invalid_argument("synth_generate: unknown nonlinearity " + spec.nonlinearity);
  }
  std::vector<std::size_t> dims = spec.view_dims;
  if (dims.empty()) dims.assign(spec.num_views, spec.latent_dim);
  if (dims.size() != spec.num_views) {
    throw std::invalid_argument("synth_generate: view_dims size must match num_views");
  }
  if (spec.identity_maps) {
    for (std::size_t d : dims) {
      if (d != spec.latent_dim) {
        throw std::invalid_argument("synth_generate: identity maps need view dim == latent dim");
      }
    }
  }

  Rng rng(spec.seed);
  const std::size_t L = spec.latent_dim;

  std::vector<double> centers(spec.classes * L);
  for (auto& v : centers) v = rng.normal() * spec.shared_scale;

  // Per-view mixing maps, variance-preserving in the latent dimension.
  std::vector<std::vector<double>> maps(spec.num_views);
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(L));
  for (std::size_t m = 0; m < spec.num_views; ++m) {
    if (spec.identity_maps) continue;
    maps[m].resize(dims[m] * L);
    for (auto& v : maps[m]) v = rng.normal() * map_scale;
  }

  MultiViewDataset ds;
  ds.num_samples = n;
  for (std::size_t m = 0; m < spec.num_views; ++m) {
    ds.views.push_back({"synthetic-" + std::to_string(m), dims[m]});
    ds.view_data.emplace_back(n * dims[m]);
  }
  ds.labels.resize(n);

  std::vector<double> latent(L);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t label = static_cast<std::uint32_t>(i % spec.classes);
    ds.labels[i] = label;
    for (std::size_t j = 0; j < L; ++j) {
      latent[j] = centers[label * L + j] + spec.within_scale * rng.normal();
    }
    for (std::size_t m = 0; m < spec.num_views; ++m) {
      double* out = ds.view_data[m].data() + i * dims[m];
      for (std::size_t j = 0; j < dims[m]; ++j) {
        double v;
        if (spec.identity_maps) {
          v = latent[j];
        } else {
          const double* row = maps[m].data() + j * L;
          v = 0.0;
          for (std::size_t l = 0; l < L; ++l) v += row[l] * latent[l];
        }
        if (spec.nonlinearity == "tanh") v = std::tanh(v);
        out[j] = v + spec.noise_scale * rng.normal();
      }
    }
  }
  ds.validate();
  return ds;
}

MultiViewDataset split_views(const std::vector<std::vector<double>>& images, std::size_t height,
                             std::size_t width, std::vector<std::uint32_t> labels) {
  const std::size_t plane = height * width;
  const std::size_t n = images.size();
  for (const auto& img : images) {
    if (img.size() != 3 * plane) {
      throw std::invalid_argument("split_views: expected 3-channel images of " +
                                  std::to_string(3 * plane) + " values, got " +
                                  std::to_string(img.size()));
    }
  }

  MultiViewDataset ds;
  ds.num_samples = n;
  ds.views = {{"rgb", 3 * plane}, {"l", plane}, {"ab", 2 * plane}};
  ds.view_data = {std::vector<double>(n * 3 * plane), std::vector<double>(n * plane),
                  std::vector<double>(n * 2 * plane)};
  ds.labels = std::move(labels);

  for (std::size_t i = 0; i < n; ++i) {
    const auto& img = images[i];
    std::copy(img.begin(), img.end(), ds.view_data[0].begin() + i * 3 * plane);
    for (std::size_t p = 0; p < plane; ++p) {
      const auto lab = color::rgb_to_lab(img[p], img[plane + p], img[2 * plane + p]);
      ds.view_data[1][i * plane + p] = lab[0] / 100.0;
      ds.view_data[2][i * 2 * plane + p] = lab[1] / 128.0;
      ds.view_data[2][i * 2 * plane + plane + p] = lab[2] / 128.0;
    }
  }
  ds.validate();
  return ds;
}

CifarBatch load_cifar_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cifar: cannot open " + path);
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0);
  constexpr std::streamoff kRecord = 3073;
  if (size % kRecord != 0) {
    throw std::runtime_error("cifar: " + path + " is not a whole number of 3073-byte records; " +
                             std::to_string(size % kRecord) + " trailing bytes at offset " +
                             std::to_string(size - size % kRecord));
  }
  const std::size_t n = static_cast<std::size_t>(size / kRecord);
  CifarBatch batch;
  batch.images.reserve(n);
  batch.labels.reserve(n);
  std::vector<unsigned char> record(kRecord);
  for (std::size_t i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(record.data()), kRecord);
    if (!in) throw std::runtime_error("cifar: short read in " + path);
    batch.labels.push_back(record[0]);
    std::vector<double> img(3072);
    for (std::size_t j = 0; j < 3072; ++j) img[j] = record[1 + j] / 255.0;
    batch.images.push_back(std::move(img));
  }
  return batch;
}

Minibatcher::Minibatcher(const MultiViewDataset& dataset, std::size_t batch_size,
                         std::uint64_t seed)
    : dataset_(&dataset), batch_size_(batch_size), seed_(seed) {
  if (batch_size == 0 || batch_size > dataset.num_samples) {
    throw std::invalid_argument("minibatches: batch size " + std::to_string(batch_size) +
                                " exceeds dataset size " + std::to_string(dataset.num_samples));
  }
}

std::vector<std::size_t> Minibatcher::epoch_order(std::uint64_t epoch) const {
  std::vector<std::size_t> ids(dataset_->num_samples);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  Rng rng = Rng::derive(seed_, epoch);
  rng.shuffle(ids);
  return ids;
}

MultiViewBatch Minibatcher::batch(std::uint64_t epoch, std::size_t index) const {
  if (index >= batches_per_epoch()) {
    throw std::out_of_range("minibatches: batch index out of range");
  }
  const auto order = epoch_order(epoch);
  MultiViewBatch out;
  out.ids.assign(order.begin() + index * batch_size_, order.begin() + (index + 1) * batch_size_);
  out.views.resize(dataset_->num_views());
  for (std::size_t m = 0; m < dataset_->num_views(); ++m) {
    const std::size_t d = dataset_->views[m].dim;
    out.views[m].resize(out.ids.size() * d);
    for (std::size_t i = 0; i < out.ids.size(); ++i) {
      const double* src = dataset_->row(m, out.ids[i]);
      std::copy(src, src + d, out.views[m].begin() + i * d);
    }
  }
  return out;
}

namespace {
constexpr char kMvdsMagic[8] = {'M', 'V', 'D', 'S', '0', '0', '0', '1'};
}

void save_mvds(const MultiViewDataset& dataset, const std::string& path) {
  dataset.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("mvds: cannot write " + path);
  out.write(kMvdsMagic, sizeof(kMvdsMagic));
  io::write_le<std::uint64_t>(out, dataset.num_views());
  io::write_le<std::uint64_t>(out, dataset.num_samples);
  io::write_le<std::uint64_t>(out, dataset.labels.size());
  for (const auto& view : dataset.views) io::write_le<std::uint64_t>(out, view.dim);
  for (const auto& values : dataset.view_data) io::write_f64_array(out, values);
  for (std::uint32_t label : dataset.labels) io::write_le<std::uint32_t>(out, label);
  if (!out) throw std::runtime_error("mvds: write failed for " + path);
}

MultiViewDataset load_mvds(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("mvds: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, 8) != std::string(kMvdsMagic, 8)) {
    throw std::runtime_error("mvds: bad magic in " + path);
  }
  const auto views = io::read_le<std::uint64_t>(in);
  const auto samples = io::read_le<std::uint64_t>(in);
  const auto label_count = io::read_le<std::uint64_t>(in);
  if (label_count != 0 && label_count != samples) {
    throw std::runtime_error("mvds: label count mismatch in " + path);
  }
  MultiViewDataset ds;
  ds.num_samples = samples;
  for (std::uint64_t m = 0; m < views; ++m) {
    const auto dim = io::read_le<std::uint64_t>(in);
    ds.views.push_back({"view-" + std::to_string(m), static_cast<std::size_t>(dim)});
  }
  for (std::uint64_t m = 0; m < views; ++m) {
    ds.view_data.push_back(io::read_f64_array(in, samples * ds.views[m].dim));
  }
  ds.labels.resize(label_count);
  for (auto& label : ds.labels) label = io::read_le<std::uint32_t>(in);
  ds.validate();
  return ds;
}

}  // namespace coconet::data
