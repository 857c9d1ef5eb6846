#pragma once

#include <cstddef>
#include <vector>

#include "coconet/tensor.hpp"

namespace coconet::ops {

// Primitive forward ops. Each one records a node on the active tape when
// any input requires grad, with an analytic node-local backward rule.
// Elementwise binaries accept identical shapes, or a 1-D rhs broadcast over
// the rows of a 2-D lhs (no broadcasting beyond that leading batch axis).

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& x, double c);
Tensor mul_scalar(const Tensor& x, double c);

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor abs(const Tensor& x);
// x must be nonnegative unless the exponent is a nonnegative integer.
Tensor pow(const Tensor& x, double exponent);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// 2-D reductions; axis 0 collapses rows (output length = columns), axis 1
// collapses columns (output length = rows).
Tensor sum_axis(const Tensor& x, int axis);
Tensor mean_axis(const Tensor& x, int axis);

Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor reshape(const Tensor& x, Shape shape);
Tensor transpose(const Tensor& x);

// Gather/permute along the leading axis (rows of 2-D, elements of 1-D) or
// along the column axis of a 2-D tensor. Indices may repeat; backward
// scatter-adds through the recorded index map.
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& indices);
Tensor gather_cols(const Tensor& x, const std::vector<std::size_t>& indices);

// Unit L2 norm of a 1-D vector, or of every row of a 2-D tensor. The norm
// denominator carries a 1e-12 floor so zero vectors stay finite.
Tensor l2_normalize(const Tensor& x);

// Mean of -log softmax(logits)[label] over the batch. logits is n x c.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<std::size_t>& labels);

// Compositions of the primitives above.
Tensor neg(const Tensor& x);
Tensor dot(const Tensor& a, const Tensor& b);

constexpr double kNormEps = 1e-12;

}  // namespace coconet::ops
