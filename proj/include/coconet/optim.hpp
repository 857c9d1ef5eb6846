#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "coconet/tensor.hpp"

namespace coconet {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

using ParamGroup = std::vector<NamedParam>;

void set_requires_grad(ParamGroup& params, bool value);
void zero_grads(ParamGroup& params);

enum class OptimizerKind { Sgd, Adam };

OptimizerKind optimizer_kind_from_string(const std::string& s);
std::string to_string(OptimizerKind kind);

// Plain SGD is the reference update (p <- p - lr * g); Adam applies the
// standard bias-corrected moment estimates.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate);

  // Applies one update from the gradients accumulated on the params.
  // Throws, naming the parameter, if any gradient is missing. Gradients are
  // consumed (cleared) by the update.
  void step(ParamGroup& params);

  // Gradient-ascent variant used by the critic phases.
  void ascent_step(ParamGroup& params);

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  std::uint64_t step_count() const { return step_count_; }

  // State access for checkpointing.
  const std::map<std::string, std::vector<double>>& first_moments() const { return m_; }
  const std::map<std::string, std::vector<double>>& second_moments() const { return v_; }
  void restore(std::uint64_t step_count, std::map<std::string, std::vector<double>> m,
               std::map<std::string, std::vector<double>> v);

 private:
  void apply(ParamGroup& params, double direction);

  OptimizerKind kind_;
  double lr_;
  std::uint64_t step_count_ = 0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::map<std::string, std::vector<double>> m_;
  std::map<std::string, std::vector<double>> v_;
};

}  // namespace coconet
