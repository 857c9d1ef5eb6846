#include "coconet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace coconet::ops {

namespace {

[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(op + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                              shape_str(b.shape()));
}

[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const std::string& what) {
  throw std::invalid_argument(op + ": " + what + ", got shape " + shape_str(a.shape()));
}

bool tracking(const Tensor& a) { return active_tape() != nullptr && a.requires_grad(); }

void record(const char* op, std::vector<Tensor> inputs, const Tensor& out,
            std::function<void()> backward) {
  active_tape()->record(Tape::Node{op, std::move(inputs), out, std::move(backward)});
}

// C += A * B with A n x k and B k x m.
void mm_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = a[i * k + kk];
      if (av == 0.0) continue;
      const double* brow = b + kk * m;
      double* crow = c + i * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

// C += A * B^T with A n x m and B k x m; C is n x k.
void mm_acc_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t m,
               std::size_t k) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double* arow = a + i * m;
      const double* brow = b + kk * m;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += arow[j] * brow[j];
      c[i * k + kk] += acc;
    }
  }
}

// C += A^T * B with A n x k and B n x m; C is k x m.
void mm_acc_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = a[i * k + kk];
      if (av == 0.0) continue;
      const double* brow = b + i * m;
      double* crow = c + kk * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

enum class BroadcastKind { None, RowVector };

BroadcastKind binary_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return BroadcastKind::None;
  if (a.rank() == 2 && b.rank() == 1 && a.dim(1) == b.dim(0)) return BroadcastKind::RowVector;
  shape_error(op, a, b);
}

template <typename Fwd>
Tensor elementwise_binary(const char* op, const Tensor& a, const Tensor& b, Fwd fwd,
                          std::function<void(const Tensor&, const Tensor&, const Tensor&)> record_bw) {
  const BroadcastKind kind = binary_kind(op, a, b);
  std::vector<double> out(a.numel());
  const auto& av = a.values();
  const auto& bv = b.values();
  if (kind == BroadcastKind::None) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i], bv[i]);
  } else {
    const std::size_t cols = b.dim(0);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i], bv[i % cols]);
  }
  Tensor result(a.shape(), std::move(out), tracking(a) || tracking(b));
  if (result.requires_grad()) record_bw(a, b, result);
  return result;
}

// Accumulates g (shaped like a 2-D lhs) into the grad of a broadcast 1-D rhs.
void accumulate_broadcast(std::vector<double>& gb, const std::vector<double>& contrib,
                          std::size_t cols) {
  for (std::size_t i = 0; i < contrib.size(); ++i) gb[i % cols] += contrib[i];
}

template <typename Fn>
Tensor elementwise_unary(const char* op, const Tensor& x, Fn fwd, std::function<double(double, double)> dfdx) {
  std::vector<double> out(x.numel());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
  Tensor result(x.shape(), std::move(out), tracking(x));
  if (result.requires_grad()) {
    record(op, {x}, result, [x = x, result, dfdx]() mutable {
      const auto& g = result.grad();
      const auto& xv = x.values();
      const auto& yv = result.values();
      auto& gx = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * dfdx(xv[i], yv[i]);
    });
  }
  return result;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_error("matmul", a, b);
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  std::vector<double> out(n * m, 0.0);
  mm_acc(a.values().data(), b.values().data(), out.data(), n, k, m);
  Tensor result(Shape{n, m}, std::move(out), tracking(a) || tracking(b));
  if (result.requires_grad()) {
    record("matmul", {a, b}, result, [a = a, b = b, result, n, k, m]() mutable {
      const auto& g = result.grad();
      if (a.requires_grad()) mm_acc_nt(g.data(), b.values().data(), a.grad_buffer().data(), n, m, k);
      if (b.requires_grad()) mm_acc_tn(a.values().data(), g.data(), b.grad_buffer().data(), n, k, m);
    });
  }
  return result;
}

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](const Tensor& a, const Tensor& b, const Tensor& out) {
        record("add", {a, b}, out, [a = a, b = b, out]() mutable {
          const auto& g = out.grad();
          if (a.requires_grad()) {
            auto& ga = a.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
          }
          if (b.requires_grad()) {
            auto& gb = b.grad_buffer();
            if (b.numel() == g.size()) {
              for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
            } else {
              accumulate_broadcast(gb, g, b.dim(0));
            }
          }
        });
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](const Tensor& a, const Tensor& b, const Tensor& out) {
        record("sub", {a, b}, out, [a = a, b = b, out]() mutable {
          const auto& g = out.grad();
          if (a.requires_grad()) {
            auto& ga = a.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
          }
          if (b.requires_grad()) {
            auto& gb = b.grad_buffer();
            if (b.numel() == g.size()) {
              for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
            } else {
              const std::size_t cols = b.dim(0);
              for (std::size_t i = 0; i < g.size(); ++i) gb[i % cols] -= g[i];
            }
          }
        });
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise_binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](const Tensor& a, const Tensor& b, const Tensor& out) {
        record("mul", {a, b}, out, [a = a, b = b, out]() mutable {
          const auto& g = out.grad();
          const auto& av = a.values();
          const auto& bv = b.values();
          const bool broadcast = b.numel() != g.size();
          const std::size_t cols = broadcast ? b.dim(0) : 0;
          if (a.requires_grad()) {
            auto& ga = a.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i)
              ga[i] += g[i] * (broadcast ? bv[i % cols] : bv[i]);
          }
          if (b.requires_grad()) {
            auto& gb = b.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
              const std::size_t j = broadcast ? (i % cols) : i;
              gb[j] += g[i] * av[i];
            }
          }
        });
      });
}

Tensor div(const Tensor& a, const Tensor& b) {
  for (double v : b.values()) {
    if (v == 0.0) throw std::domain_error("div: division by zero");
  }
  return elementwise_binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](const Tensor& a, const Tensor& b, const Tensor& out) {
        record("div", {a, b}, out, [a = a, b = b, out]() mutable {
          const auto& g = out.grad();
          const auto& av = a.values();
          const auto& bv = b.values();
          const bool broadcast = b.numel() != g.size();
          const std::size_t cols = broadcast ? b.dim(0) : 0;
          if (a.requires_grad()) {
            auto& ga = a.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i)
              ga[i] += g[i] / (broadcast ? bv[i % cols] : bv[i]);
          }
          if (b.requires_grad()) {
            auto& gb = b.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) {
              const std::size_t j = broadcast ? (i % cols) : i;
              gb[j] -= g[i] * av[i] / (bv[j] * bv[j]);
            }
          }
        });
      });
}

Tensor add_scalar(const Tensor& x, double c) {
  return elementwise_unary(
      "add_scalar", x, [c](double v) { return v + c; },
      [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& x, double c) {
  return elementwise_unary(
      "mul_scalar", x, [c](double v) { return v * c; },
      [c](double, double) { return c; });
}

Tensor exp(const Tensor& x) {
  return elementwise_unary(
      "exp", x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (double v : x.values()) {
    if (v <= 0.0) throw std::domain_error("log: nonpositive input " + std::to_string(v));
  }
  return elementwise_unary(
      "log", x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor relu(const Tensor& x) {
  return elementwise_unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor abs(const Tensor& x) {
  return elementwise_unary(
      "abs", x, [](double v) { return std::fabs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor pow(const Tensor& x, double exponent) {
  const bool integral = exponent == std::floor(exponent);
  for (double v : x.values()) {
    if (v < 0.0 && !integral)
      throw std::domain_error("pow: negative base with fractional exponent");
    if (v == 0.0 && exponent < 0.0) throw std::domain_error("pow: zero base with negative exponent");
  }
  return elementwise_unary(
      "pow", x, [exponent](double v) { return std::pow(v, exponent); },
      [exponent](double v, double) {
        if (v == 0.0) {
          // a.e. derivative convention at the boundary: exact for e = 1,
          // zero-clamped for the non-differentiable e < 1 corner.
          return exponent == 1.0 ? 1.0 : 0.0;
        }
        return exponent * std::pow(v, exponent - 1.0);
      });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  Tensor result = Tensor::scalar(acc);
  result.set_requires_grad(tracking(x));
  if (result.requires_grad()) {
    record("sum", {x}, result, [x = x, result]() mutable {
      const double g = result.grad()[0];
      auto& gx = x.grad_buffer();
      for (auto& v : gx) v += g;
    });
  }
  return result;
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw std::invalid_argument("mean: empty tensor");
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  const double inv = 1.0 / static_cast<double>(x.numel());
  Tensor result = Tensor::scalar(acc * inv);
  result.set_requires_grad(tracking(x));
  if (result.requires_grad()) {
    record("mean", {x}, result, [x = x, result, inv]() mutable {
      const double g = result.grad()[0] * inv;
      auto& gx = x.grad_buffer();
      for (auto& v : gx) v += g;
    });
  }
  return result;
}

namespace {

Tensor reduce_axis(const char* op, const Tensor& x, int axis, bool take_mean) {
  if (x.rank() != 2) shape_error(op, x, "expected a 2-D tensor");
  if (axis != 0 && axis != 1) throw std::invalid_argument(std::string(op) + ": axis must be 0 or 1");
  const std::size_t n = x.dim(0), d = x.dim(1);
  const std::size_t out_len = axis == 0 ? d : n;
  const double inv = take_mean ? 1.0 / static_cast<double>(axis == 0 ? n : d) : 1.0;
  std::vector<double> out(out_len, 0.0);
  const auto& xv = x.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out[axis == 0 ? j : i] += xv[i * d + j];
    }
  }
  if (take_mean) {
    for (auto& v : out) v *= inv;
  }
  Tensor result(Shape{out_len}, std::move(out), tracking(x));
  if (result.requires_grad()) {
    record(op, {x}, result, [x = x, result, axis, inv, n, d]() mutable {
      const auto& g = result.grad();
      auto& gx = x.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          gx[i * d + j] += g[axis == 0 ? j : i] * inv;
        }
      }
    });
  }
  return result;
}

}  // namespace

Tensor sum_axis(const Tensor& x, int axis) { return reduce_axis("sum_axis", x, axis, false); }

Tensor mean_axis(const Tensor& x, int axis) { return reduce_axis("mean_axis", x, axis, true); }

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: needs at least one tensor");
  const std::size_t rank = parts.front().rank();
  if (rank != 1 && rank != 2) shape_error("concat", parts.front(), "expected 1-D or 2-D tensors");
  if (axis < 0 || static_cast<std::size_t>(axis) >= rank)
    throw std::invalid_argument("concat: axis out of range");
  bool rg = false;
  for (const auto& t : parts) {
    if (t.rank() != rank) shape_error("concat", parts.front(), t);
    rg = rg || tracking(t);
  }

  Shape out_shape;
  std::vector<double> out;
  if (rank == 1 || axis == 0) {
    std::size_t total = 0;
    const std::size_t cols = rank == 2 ? parts.front().dim(1) : 0;
    for (const auto& t : parts) {
      if (rank == 2 && t.dim(1) != cols) shape_error("concat", parts.front(), t);
      total += t.dim(0);
    }
    out_shape = rank == 1 ? Shape{total} : Shape{total, cols};
    out.reserve(shape_numel(out_shape));
    for (const auto& t : parts) out.insert(out.end(), t.values().begin(), t.values().end());
  } else {
    const std::size_t n = parts.front().dim(0);
    std::size_t total_cols = 0;
    for (const auto& t : parts) {
      if (t.dim(0) != n) shape_error("concat", parts.front(), t);
      total_cols += t.dim(1);
    }
    out_shape = Shape{n, total_cols};
    out.resize(n * total_cols);
    std::size_t col_off = 0;
    for (const auto& t : parts) {
      const std::size_t d = t.dim(1);
      const auto& tv = t.values();
      for (std::size_t i = 0; i < n; ++i) {
        std::copy(tv.begin() + i * d, tv.begin() + (i + 1) * d,
                  out.begin() + i * total_cols + col_off);
      }
      col_off += d;
    }
  }

  Tensor result(std::move(out_shape), std::move(out), rg);
  if (result.requires_grad()) {
    std::vector<Tensor> inputs = parts;
    record("concat", inputs, result, [parts = inputs, result, axis, rank]() mutable {
      const auto& g = result.grad();
      if (rank == 1 || axis == 0) {
        std::size_t off = 0;
        for (auto& t : parts) {
          if (t.requires_grad()) {
            auto& gt = t.grad_buffer();
            for (std::size_t i = 0; i < gt.size(); ++i) gt[i] += g[off + i];
          }
          off += t.numel();
        }
      } else {
        const std::size_t n = result.dim(0);
        const std::size_t total_cols = result.dim(1);
        std::size_t col_off = 0;
        for (auto& t : parts) {
          const std::size_t d = t.dim(1);
          if (t.requires_grad()) {
            auto& gt = t.grad_buffer();
            for (std::size_t i = 0; i < n; ++i) {
              for (std::size_t j = 0; j < d; ++j) {
                gt[i * d + j] += g[i * total_cols + col_off + j];
              }
            }
          }
          col_off += d;
        }
      }
    });
  }
  return result;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw std::invalid_argument("reshape: cannot view " + shape_str(x.shape()) + " as " +
                                shape_str(shape));
  }
  Tensor result(std::move(shape), x.values(), tracking(x));
  if (result.requires_grad()) {
    record("reshape", {x}, result, [x = x, result]() mutable {
      const auto& g = result.grad();
      auto& gx = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return result;
}

Tensor transpose(const Tensor& x) {
  if (x.rank() != 2) shape_error("transpose", x, "expected a 2-D tensor");
  const std::size_t n = x.dim(0), d = x.dim(1);
  std::vector<double> out(n * d);
  const auto& xv = x.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[j * n + i] = xv[i * d + j];
  }
  Tensor result(Shape{d, n}, std::move(out), tracking(x));
  if (result.requires_grad()) {
    record("transpose", {x}, result, [x = x, result, n, d]() mutable {
      const auto& g = result.grad();
      auto& gx = x.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += g[j * n + i];
      }
    });
  }
  return result;
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& indices) {
  if (x.rank() != 1 && x.rank() != 2) shape_error("gather_rows", x, "expected 1-D or 2-D tensor");
  const std::size_t rows = x.dim(0);
  const std::size_t cols = x.rank() == 2 ? x.dim(1) : 1;
  for (std::size_t idx : indices) {
    if (idx >= rows)
      throw std::out_of_range("gather_rows: index " + std::to_string(idx) + " out of " +
                              std::to_string(rows));
  }
  std::vector<double> out(indices.size() * cols);
  const auto& xv = x.values();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy(xv.begin() + indices[i] * cols, xv.begin() + (indices[i] + 1) * cols,
              out.begin() + i * cols);
  }
  Shape shape = x.rank() == 2 ? Shape{indices.size(), cols} : Shape{indices.size()};
  Tensor result(std::move(shape), std::move(out), tracking(x));
  if (result.requires_grad()) {
    record("gather_rows", {x}, result, [x = x, result, indices, cols]() mutable {
      const auto& g = result.grad();
      auto& gx = x.grad_buffer();
      for (std::size_t i = 0; i < indices.size(); ++i) {
        for (std::size_t j = 0; j < cols; ++j) gx[indices[i] * cols + j] += g[i * cols + j];
      }
    });
  }
  return result;
}

Tensor gather_cols(const Tensor& x, const std::vector<std::size_t>& indices) {
  if (x.rank() != 2) shape_error("gather_cols", x, "expected a 2-D tensor");
  const std::size_t n = x.dim(0), d = x.dim(1);
  for (std::size_t idx : indices) {
    if (idx >= d)
      throw std::out_of_range("gather_cols: index " + std::to_string(idx) + " out of " +
                              std::to_string(d));
  }
  std::vector<double> out(n * indices.size());
  const auto& xv = x.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < indices.size(); ++j) out[i * indices.size() + j] = xv[i * d + indices[j]];
  }
  Tensor result(Shape{n, indices.size()}, std::move(out), tracking(x));
  if (result.requires_grad()) {
    record("gather_cols", {x}, result, [x = x, result, indices, n, d]() mutable {
      const auto& g = result.grad();
      auto& gx = x.grad_buffer();
      const std::size_t k = indices.size();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) gx[i * d + indices[j]] += g[i * k + j];
      }
    });
  }
  return result;
}

Tensor l2_normalize(const Tensor& x) {
  if (x.rank() != 1 && x.rank() != 2) shape_error("l2_normalize", x, "expected 1-D or 2-D tensor");
  const std::size_t rows = x.rank() == 2 ? x.dim(0) : 1;
  const std::size_t cols = x.rank() == 2 ? x.dim(1) : x.dim(0);
  std::vector<double> out(x.numel());
  std::vector<double> norms(rows);
  const auto& xv = x.values();
  for (std::size_t i = 0; i < rows; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < cols; ++j) sq += xv[i * cols + j] * xv[i * cols + j];
    const double r = std::sqrt(sq);
    norms[i] = r;
    const double inv = 1.0 / (r + kNormEps);
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = xv[i * cols + j] * inv;
  }
  Tensor result(x.shape(), std::move(out), tracking(x));
  if (result.requires_grad()) {
    record("l2_normalize", {x}, result, [x = x, result, norms, rows, cols]() mutable {
      const auto& g = result.grad();
      const auto& xv = x.values();
      const auto& yv = result.values();
      auto& gx = x.grad_buffer();
      for (std::size_t i = 0; i < rows; ++i) {
        const double r = norms[i];
        const double inv = 1.0 / (r + kNormEps);
        double gy = 0.0;
        for (std::size_t j = 0; j < cols; ++j) gy += g[i * cols + j] * yv[i * cols + j];
        const double scale = r > 0.0 ? gy / r : 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
          gx[i * cols + j] += (g[i * cols + j] - scale * xv[i * cols + j]) * inv;
        }
      }
    });
  }
  return result;
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<std::size_t>& labels) {
  if (logits.rank() != 2) shape_error("softmax_cross_entropy", logits, "expected a 2-D tensor");
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (labels.size() != n) {
    throw std::invalid_argument("softmax_cross_entropy: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(n) + " rows");
  }
  for (std::size_t lab : labels) {
    if (lab >= c) throw std::out_of_range("softmax_cross_entropy: label out of range");
  }
  const auto& lv = logits.values();
  std::vector<double> probs(n * c);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = lv.data() + i * c;
    double mx = row[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    const double logz = std::log(z) + mx;
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = std::exp(row[j] - logz);
    loss -= row[labels[i]] - logz;
  }
  Tensor result = Tensor::scalar(loss / static_cast<double>(n));
  result.set_requires_grad(tracking(logits));
  if (result.requires_grad()) {
    record("softmax_cross_entropy", {logits}, result,
           [logits = logits, result, probs = std::move(probs), labels, n, c]() mutable {
             const double g = result.grad()[0] / static_cast<double>(n);
             auto& gx = logits.grad_buffer();
             for (std::size_t i = 0; i < n; ++i) {
               for (std::size_t j = 0; j < c; ++j) {
                 const double onehot = j == labels[i] ? 1.0 : 0.0;
                 gx[i * c + j] += g * (probs[i * c + j] - onehot);
               }
             }
           });
  }
  return result;
}

Tensor neg(const Tensor& x) { return mul_scalar(x, -1.0); }

Tensor dot(const Tensor& a, const Tensor& b) { return sum(mul(a, b)); }

}  // namespace coconet::ops
