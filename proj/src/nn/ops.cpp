#include "pagan/nn/ops.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pagan::nn {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()));
  }
}

void require_rank(const Var& a, std::size_t rank, const char* op) {
  if (a.shape().size() != rank) {
    throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(rank) +
                                ", got " + shape_string(a.shape()));
  }
}

const Var& input(const Var& self, std::size_t i) { return self.node()->inputs[i]; }

template <class F>
Tensor map_values(const Tensor& x, F&& f) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

IndexMap make_index(std::vector<std::ptrdiff_t> idx) {
  return std::make_shared<const std::vector<std::ptrdiff_t>>(std::move(idx));
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return make_node(std::move(out), "add", {a, b},
                   [](const Var& gy, const Var&) { return std::vector<Var>{gy, gy}; });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return make_node(std::move(out), "sub", {a, b},
                   [](const Var& gy, const Var&) { return std::vector<Var>{gy, neg(gy)}; });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_node(std::move(out), "mul", {a, b}, [](const Var& gy, const Var& self) {
    return std::vector<Var>{mul(gy, input(self, 1)), mul(gy, input(self, 0))};
  });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var scale(const Var& a, double factor) {
  Tensor out = map_values(a.value(), [factor](double v) { return v * factor; });
  return make_node(std::move(out), "scale", {a}, [factor](const Var& gy, const Var&) {
    return std::vector<Var>{scale(gy, factor)};
  });
}

Var add_scalar(const Var& a, double offset) {
  Tensor out = map_values(a.value(), [offset](double v) { return v + offset; });
  return make_node(std::move(out), "add_scalar", {a},
                   [](const Var& gy, const Var&) { return std::vector<Var>{gy}; });
}

Var square(const Var& a) {
  Tensor out = map_values(a.value(), [](double v) { return v * v; });
  return make_node(std::move(out), "square", {a}, [](const Var& gy, const Var& self) {
    return std::vector<Var>{mul(gy, scale(input(self, 0), 2.0))};
  });
}

Var matmul(const Var& a, const Var& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw std::invalid_argument("matmul: inner dimensions differ " + shape_string(a.shape()) +
                                " x " + shape_string(b.shape()));
  }
  Tensor out({m, n}, 0.0);
  const double* pa = a.value().data();
  const double* pb = b.value().data();
  double* po = out.data();
  // Accumulation runs over k in ascending order for every output entry.
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* __restrict r0 = po + i * n;
    double* __restrict r1 = r0 + n;
    double* __restrict r2 = r1 + n;
    double* __restrict r3 = r2 + n;
    for (std::size_t p = 0; p < k; ++p) {
      const double a0 = pa[i * k + p], a1 = pa[(i + 1) * k + p];
      const double a2 = pa[(i + 2) * k + p], a3 = pa[(i + 3) * k + p];
      const double* __restrict brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double bv = brow[j];
        r0[j] += a0 * bv;
        r1[j] += a1 * bv;
        r2[j] += a2 * bv;
        r3[j] += a3 * bv;
      }
    }
  }
  for (; i < m; ++i) {
    double* row = po + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return make_node(std::move(out), "matmul", {a, b}, [](const Var& gy, const Var& self) {
    const Var& x = input(self, 0);
    const Var& y = input(self, 1);
    return std::vector<Var>{matmul(gy, transpose(y)), matmul(transpose(x), gy)};
  });
}

Var transpose(const Var& a) {
  require_rank(a, 2, "transpose");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.value()[i * n + j];
  return make_node(std::move(out), "transpose", {a}, [](const Var& gy, const Var&) {
    return std::vector<Var>{transpose(gy)};
  });
}

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return make_node(std::move(out), "reshape", {a}, [](const Var& gy, const Var& self) {
    return std::vector<Var>{reshape(gy, input(self, 0).shape())};
  });
}

Var sum(const Var& a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return make_node(Tensor::scalar(total), "sum", {a}, [](const Var& gy, const Var& self) {
    return std::vector<Var>{broadcast_scalar(gy, input(self, 0).shape())};
  });
}

Var mean(const Var& a) {
  if (a.size() == 0) throw std::invalid_argument("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Var gather(const Var& x, IndexMap index, Shape out_shape) {
  if (index->size() != numel(out_shape)) {
    throw std::invalid_argument("gather: index size does not match output shape");
  }
  Tensor out(out_shape);
  const auto& idx = *index;
  const std::ptrdiff_t limit = static_cast<std::ptrdiff_t>(x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= limit) throw std::out_of_range("gather: index out of range");
    out[i] = idx[i] < 0 ? 0.0 : x.value()[static_cast<std::size_t>(idx[i])];
  }
  return make_node(std::move(out), "gather", {x}, [index](const Var& gy, const Var& self) {
    return std::vector<Var>{scatter_add(gy, index, input(self, 0).shape())};
  });
}

Var scatter_add(const Var& x, IndexMap index, Shape out_shape) {
  if (index->size() != x.size()) {
    throw std::invalid_argument("scatter_add: index size does not match input");
  }
  Tensor out(out_shape, 0.0);
  const auto& idx = *index;
  const std::ptrdiff_t limit = static_cast<std::ptrdiff_t>(out.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0) continue;
    if (idx[i] >= limit) throw std::out_of_range("scatter_add: index out of range");
    out[static_cast<std::size_t>(idx[i])] += x.value()[i];
  }
  return make_node(std::move(out), "scatter_add", {x}, [index](const Var& gy, const Var& self) {
    return std::vector<Var>{gather(gy, index, input(self, 0).shape())};
  });
}

Var broadcast_scalar(const Var& s, const Shape& shape) {
  if (s.size() != 1) throw std::invalid_argument("broadcast_scalar: input must hold one value");
  return gather(s, make_index(std::vector<std::ptrdiff_t>(numel(shape), 0)), shape);
}

Var broadcast_rows(const Var& row, std::size_t rows) {
  const std::size_t n = row.size();
  std::vector<std::ptrdiff_t> idx(rows * n);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < n; ++j) idx[i * n + j] = static_cast<std::ptrdiff_t>(j);
  return gather(row, make_index(std::move(idx)), {rows, n});
}

Var sum_rows(const Var& x) {
  require_rank(x, 2, "sum_rows");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  std::vector<std::ptrdiff_t> idx(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) idx[i * n + j] = static_cast<std::ptrdiff_t>(j);
  return scatter_add(x, make_index(std::move(idx)), {n});
}

Var row_norms_squared(const Var& x) {
  const std::size_t m = x.shape().at(0);
  const std::size_t per_row = m ? x.size() / m : 0;
  std::vector<std::ptrdiff_t> idx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) idx[i] = static_cast<std::ptrdiff_t>(i / per_row);
  return scatter_add(square(x), make_index(std::move(idx)), {m});
}

Var add_row_bias(const Var& x, const Var& bias) {
  require_rank(x, 2, "add_row_bias");
  if (bias.size() != x.shape()[1]) throw std::invalid_argument("add_row_bias: width mismatch");
  return add(x, broadcast_rows(reshape(bias, {bias.size()}), x.shape()[0]));
}

Var concat_columns(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_columns: no inputs");
  const std::size_t rows = parts.front().shape().at(0);
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.shape().at(0) != rows) throw std::invalid_argument("concat_columns: row mismatch");
    total += p.size() / rows;
  }
  Var out;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t cols = p.size() / rows;
    std::vector<std::ptrdiff_t> idx(p.size());
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        idx[r * cols + c] = static_cast<std::ptrdiff_t>(r * total + offset + c);
    Var placed = scatter_add(p, make_index(std::move(idx)), {rows, total});
    out = out ? add(out, placed) : placed;
    offset += cols;
  }
  return out;
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Shape trailing(parts.front().shape().begin() + 1, parts.front().shape().end());
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (Shape(p.shape().begin() + 1, p.shape().end()) != trailing) {
      throw std::invalid_argument("concat_rows: trailing shape mismatch");
    }
    rows += p.shape()[0];
  }
  Shape out_shape = trailing;
  out_shape.insert(out_shape.begin(), rows);
  Var out;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::vector<std::ptrdiff_t> idx(p.size());
    std::iota(idx.begin(), idx.end(), static_cast<std::ptrdiff_t>(offset));
    Var placed = scatter_add(p, make_index(std::move(idx)), out_shape);
    out = out ? add(out, placed) : placed;
    offset += p.size();
  }
  return out;
}

Var select_rows(const Var& x, const std::vector<std::size_t>& rows) {
  const std::size_t n = x.shape().at(0);
  const std::size_t per_row = n ? x.size() / n : 0;
  std::vector<std::ptrdiff_t> idx;
  idx.reserve(rows.size() * per_row);
  for (std::size_t r : rows) {
    if (r >= n) throw std::out_of_range("select_rows: row out of range");
    for (std::size_t c = 0; c < per_row; ++c) idx.push_back(static_cast<std::ptrdiff_t>(r * per_row + c));
  }
  Shape shape = x.shape();
  shape[0] = rows.size();
  return gather(x, make_index(std::move(idx)), shape);
}

Var leaky_relu(const Var& x, double slope) {
  Tensor mask = map_values(x.value(), [slope](double v) { return v > 0.0 ? 1.0 : slope; });
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return make_node(std::move(out), "leaky_relu", {x},
                   [mask = std::move(mask)](const Var& gy, const Var&) {
                     return std::vector<Var>{mul_constant(gy, mask)};
                   });
}

Var relu(const Var& x) { return leaky_relu(x, 0.0); }

Var tanh(const Var& x) {
  Tensor out = map_values(x.value(), [](double v) { return std::tanh(v); });
  return make_node(std::move(out), "tanh", {x}, [](const Var& gy, const Var& self) {
    return std::vector<Var>{mul(gy, add_scalar(neg(square(self)), 1.0))};
  });
}

Var sigmoid(const Var& x) {
  Tensor out = map_values(x.value(), [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  return make_node(std::move(out), "sigmoid", {x}, [](const Var& gy, const Var& self) {
    return std::vector<Var>{mul(gy, mul(self, add_scalar(neg(self), 1.0)))};
  });
}

Var softplus(const Var& x) {
  Tensor out = map_values(x.value(), [](double v) {
    return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
  });
  return make_node(std::move(out), "softplus", {x}, [](const Var& gy, const Var& self) {
    return std::vector<Var>{mul(gy, sigmoid(input(self, 0)))};
  });
}

Var sqrt(const Var& x) {
  Tensor out = map_values(x.value(), [](double v) { return std::sqrt(v); });
  return make_node(std::move(out), "sqrt", {x}, [](const Var& gy, const Var& self) {
    return std::vector<Var>{mul(gy, scale(reciprocal(self), 0.5))};
  });
}

Var reciprocal(const Var& x) {
  Tensor out = map_values(x.value(), [](double v) { return 1.0 / v; });
  return make_node(std::move(out), "reciprocal", {x}, [](const Var& gy, const Var& self) {
    return std::vector<Var>{mul(gy, neg(square(self)))};
  });
}

Var mul_constant(const Var& x, const Tensor& mask) {
  if (mask.shape() != x.shape()) throw std::invalid_argument("mul_constant: shape mismatch");
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return make_node(std::move(out), "mul_constant", {x}, [mask](const Var& gy, const Var&) {
    return std::vector<Var>{mul_constant(gy, mask)};
  });
}

}  // namespace pagan::nn
