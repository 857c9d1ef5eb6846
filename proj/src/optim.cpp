#include "coconet/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace coconet {

void set_requires_grad(ParamGroup& params, bool value) {
  for (auto& p : params) p.tensor.set_requires_grad(value);
}

void zero_grads(ParamGroup& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "adam") return OptimizerKind::Adam;
  throw std::invalid_argument("unknown optimizer kind: " + s);
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::Sgd ? "sgd" : "adam";
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {}

void Optimizer::step(ParamGroup& params) { apply(params, 1.0); }

void Optimizer::ascent_step(ParamGroup& params) { apply(params, -1.0); }

void Optimizer::apply(ParamGroup& params, double direction) {
  for (auto& p : params) {
    if (!p.tensor.has_grad()) {
      throw std::logic_error("optimizer: missing gradient for parameter '" + p.name + "'");
    }
  }
  ++step_count_;
  for (auto& p : params) {
    auto& values = p.tensor.values();
    const auto& grad = p.tensor.grad();
    if (kind_ == OptimizerKind::Sgd) {
      for (std::size_t i = 0; i < values.size(); ++i) values[i] -= direction * lr_ * grad[i];
    } else {
      auto& m = m_[p.name];
      auto& v = v_[p.name];
      if (m.empty()) m.assign(values.size(), 0.0);
      if (v.empty()) v.assign(values.size(), 0.0);
      if (m.size() != values.size()) {
        throw std::logic_error("optimizer: moment buffer mismatch for '" + p.name + "'");
      }
      const double t = static_cast<double>(step_count_);
      const double bc1 = 1.0 - std::pow(beta1_, t);
      const double bc2 = 1.0 - std::pow(beta2_, t);
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double g = direction * grad[i];
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        values[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
    p.tensor.zero_grad();
  }
}

void Optimizer::restore(std::uint64_t step_count, std::map<std::string, std::vector<double>> m,
                        std::map<std::string, std::vector<double>> v) {
  step_count_ = step_count;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace coconet
