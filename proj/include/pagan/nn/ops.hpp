#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "pagan/nn/autograd.hpp"

namespace pagan::nn {

// Flat source index per output element; -1 yields zero.
using IndexMap = std::shared_ptr<const std::vector<std::ptrdiff_t>>;

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);  // elementwise, equal shapes
Var neg(const Var& a);
Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double offset);
Var square(const Var& a);

Var matmul(const Var& a, const Var& b);  // [m,k] x [k,n]
Var transpose(const Var& a);             // 2-D

Var reshape(const Var& a, Shape shape);
Var sum(const Var& a);   // -> [1]
Var mean(const Var& a);  // -> [1]

// y[i] = x[index[i]] (0 where index[i] < 0).
Var gather(const Var& x, IndexMap index, Shape out_shape);
// y[index[i]] += x[i]; adjoint of gather.
Var scatter_add(const Var& x, IndexMap index, Shape out_shape);

Var broadcast_scalar(const Var& s, const Shape& shape);  // [1] -> shape
Var broadcast_rows(const Var& row, std::size_t rows);    // [n] -> [rows,n]
Var sum_rows(const Var& x);                              // [m,n] -> [n]
Var row_norms_squared(const Var& x);                     // [m,...] -> [m]
Var add_row_bias(const Var& x, const Var& bias);         // [m,n] + [n]

// Concatenates 2-D views [rows, cols_i] of the inputs along the column axis.
// Inputs of rank > 2 are viewed as [dim0, rest].
Var concat_columns(const std::vector<Var>& parts);
// Stacks inputs along axis 0; trailing dims must agree.
Var concat_rows(const std::vector<Var>& parts);
Var select_rows(const Var& x, const std::vector<std::size_t>& rows);

Var leaky_relu(const Var& x, double slope);
Var relu(const Var& x);
Var tanh(const Var& x);
Var sigmoid(const Var& x);
Var softplus(const Var& x);  // log(1 + e^x), overflow safe
Var sqrt(const Var& x);
Var reciprocal(const Var& x);

// Multiplies by a fixed tensor (no gradient to the mask).
Var mul_constant(const Var& x, const Tensor& mask);

}  // namespace pagan::nn
