#include "coconet/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace coconet::nn {

Linear::Linear(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> w(in * out);
  for (auto& v : w) v = rng.uniform(-bound, bound);
  weight = Tensor(Shape{in, out}, std::move(w), true);
  bias = Tensor::zeros(Shape{out}, true);
}

void Linear::collect(ParamGroup& group, const std::string& prefix) const {
  group.push_back({prefix + "/W", weight});
  group.push_back({prefix + "/b", bias});
}

Mlp::Mlp(const std::vector<std::size_t>& dims, Rng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("mlp: need at least input and output dims");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    layers.emplace_back(dims[i], dims[i + 1], rng);
  }
}

Tensor Mlp::forward(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].forward(h);
    if (i + 1 < layers.size()) h = ops::relu(h);
  }
  return h;
}

void Mlp::collect(ParamGroup& group, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].collect(group, prefix + "/l" + std::to_string(i));
  }
}

}  // namespace coconet::nn
