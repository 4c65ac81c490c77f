#include "pagan/nn/spectral_norm.hpp"

#include <cmath>
#include <stdexcept>

#include "pagan/nn/ops.hpp"

namespace pagan::nn {

namespace {

struct MatrixView {
  const double* data;
  std::size_t rows;
  std::size_t cols;
};

MatrixView as_matrix(const Tensor& w) {
  if (w.rank() != 2) throw std::invalid_argument("spectral norm expects a 2-D weight");
  return {w.data(), w.dim(0), w.dim(1)};
}

// v = W^T u
std::vector<double> times_transpose(const MatrixView& w, const std::vector<double>& u) {
  std::vector<double> v(w.cols, 0.0);
  for (std::size_t i = 0; i < w.rows; ++i)
    for (std::size_t j = 0; j < w.cols; ++j) v[j] += w.data[i * w.cols + j] * u[i];
  return v;
}

std::vector<double> times(const MatrixView& w, const std::vector<double>& v) {
  std::vector<double> u(w.rows, 0.0);
  for (std::size_t i = 0; i < w.rows; ++i)
    for (std::size_t j = 0; j < w.cols; ++j) u[i] += w.data[i * w.cols + j] * v[j];
  return u;
}

double norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

bool normalize(std::vector<double>& x) {
  const double n = norm(x);
  if (n == 0.0) return false;
  for (double& v : x) v /= n;
  return true;
}

void check_state(const MatrixView& w, const std::vector<double>& u) {
  if (u.size() != w.rows) throw std::invalid_argument("power-iteration vector has wrong length");
  if (norm(u) == 0.0) throw std::invalid_argument("power-iteration vector must be nonzero");
}

void power_iterate(const MatrixView& w, std::vector<double>& u, int iters) {
  for (int it = 0; it < iters; ++it) {
    auto v = times_transpose(w, u);
    if (!normalize(v)) return;
    auto next = times(w, v);
    if (!normalize(next)) return;
    u = std::move(next);
  }
}

}  // namespace

std::vector<double> init_power_vector(std::size_t rows, Rng& rng) {
  std::vector<double> u(rows);
  do {
    for (double& v : u) v = standard_normal(rng);
  } while (!normalize(u));
  return u;
}

SpectralNormResult spectral_normalize(const Tensor& weight, int iters, std::vector<double>& u) {
  if (iters < 1) throw std::invalid_argument("spectral_normalize needs at least one iteration");
  const auto w = as_matrix(weight);
  check_state(w, u);
  power_iterate(w, u, iters);
  const double sigma = norm(times_transpose(w, u));
  SpectralNormResult result;
  result.sigma = sigma;
  if (sigma == 0.0) {
    result.normalized = weight;
    result.degenerate = true;
    return result;
  }
  result.normalized = weight;
  for (double& v : result.normalized.values()) v /= sigma;
  return result;
}

Var spectral_normalized(const Var& weight, std::vector<double>& u, int update_iters) {
  const auto w = as_matrix(weight.value());
  check_state(w, u);
  if (update_iters > 0) power_iterate(w, u, update_iters);
  auto v = times_transpose(w, u);
  const double sigma = norm(v);
  if (sigma == 0.0) return weight;
  Tensor direction({w.rows, w.cols});
  for (std::size_t i = 0; i < w.rows; ++i)
    for (std::size_t j = 0; j < w.cols; ++j) direction[i * w.cols + j] = u[i] * v[j] / sigma;
  Var sigma_var = sum(mul_constant(weight, direction));
  return mul(weight, broadcast_scalar(reciprocal(sigma_var), weight.shape()));
}

}  // namespace pagan::nn
