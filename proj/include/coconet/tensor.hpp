#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace coconet {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major 64-bit tensor with value semantics on the handle and a
// shared payload, so gradients accumulated during backward are visible to
// every holder of the same leaf.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor row_vector(std::vector<double> values, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->values.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape[axis]; }

  const std::vector<double>& values() const { return impl_->values; }
  std::vector<double>& values() { return impl_->values; }
  double value() const;  // scalar tensors only

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool rg) { impl_->requires_grad = rg; }

  bool has_grad() const { return !impl_->grad.empty(); }
  const std::vector<double>& grad() const;
  // Zero-initialized accumulator of the same size as values().
  std::vector<double>& grad_buffer();
  void zero_grad() { impl_->grad.clear(); }

  // Stable identity of the shared payload (used by the tape).
  const void* id() const { return impl_.get(); }

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

// Ordered record of the primitive ops of one forward pass. Replaying the
// node-local backward rules in reverse order accumulates gradients into
// every requires_grad leaf reachable from the loss.
class Tape {
 public:
  struct Node {
    std::string op;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };

  void record(Node node) { nodes_.push_back(std::move(node)); }

  // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse. Clears the
  // tape afterwards. Throws if loss is not scalar or the tape is empty.
  void backward(const Tensor& loss);

  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  std::vector<Node> nodes_;
};

Tape* active_tape();

// RAII activation of a tape for the current thread. Ops record themselves
// on the active tape whenever any input requires grad; with no active tape
// they compute plain values.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

}  // namespace coconet
