#pragma once

#include <string>
#include <vector>

#include "coconet/ops.hpp"
#include "coconet/optim.hpp"
#include "coconet/rng.hpp"
#include "coconet/tensor.hpp"

namespace coconet::nn {

// Affine layer y = x W + b with W of shape {in, out}. Weights start
// uniform in +-sqrt(6 / (fan_in + fan_out)), biases at zero.
struct Linear {
  Tensor weight;
  Tensor bias;

  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng);

  Tensor forward(const Tensor& x) const { return ops::add(ops::matmul(x, weight), bias); }

  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }

  void collect(ParamGroup& group, const std::string& prefix) const;
};

// Feed-forward stack with relu between layers; the output layer is linear.
struct Mlp {
  std::vector<Linear> layers;

  Mlp() = default;
  // dims = {in, hidden..., out}
  Mlp(const std::vector<std::size_t>& dims, Rng& rng);

  Tensor forward(const Tensor& x) const;

  void collect(ParamGroup& group, const std::string& prefix) const;
};

}  // namespace coconet::nn
