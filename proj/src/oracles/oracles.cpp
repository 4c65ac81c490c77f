#include "pagan/oracles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace pagan::oracles {

namespace {

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

}  // namespace

double js_by_entropy(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("js_by_entropy: size mismatch");
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  return entropy(m) - 0.5 * (entropy(p) + entropy(q));
}

std::pair<prob::JointTable, prob::JointTable> joints_by_parity(const prob::DiscreteDistribution& p_d,
                                                                const prob::DiscreteDistribution& p_g,
                                                                int level) {
  prob::JointTable p, q;
  p.space_size = q.space_size = p_d.space_size();
  p.sequences = q.sequences = std::size_t{1} << level;
  p.level = q.level = level;
  p.masses.resize(p.space_size * p.sequences);
  q.masses.resize(p.masses.size());
  const double w = std::ldexp(1.0, -level);
  for (std::size_t x = 0; x < p.space_size; ++x) {
    for (std::size_t s = 0; s < p.sequences; ++s) {
      const bool even = std::popcount(s) % 2 == 0;
      p.masses[x * p.sequences + s] = (even ? p_d[x] : p_g[x]) * w;
      q.masses[x * p.sequences + s] = (even ? p_g[x] : p_d[x]) * w;
    }
  }
  return {std::move(p), std::move(q)};
}

nn::Tensor naive_conv2d(const nn::Tensor& x, const nn::Tensor& weight, const nn::Tensor& bias,
                        const nn::ConvGeometry& g) {
  const std::size_t n = x.dim(0), c = g.in_channels, k = g.kernel, o = weight.dim(0);
  nn::Tensor y({n, o, g.out_h, g.out_w}, 0.0);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t oc = 0; oc < o; ++oc)
      for (std::size_t oh = 0; oh < g.out_h; ++oh)
        for (std::size_t ow = 0; ow < g.out_w; ++ow) {
          double acc = bias.empty() ? 0.0 : bias[oc];
          for (std::size_t ic = 0; ic < c; ++ic)
            for (std::size_t ki = 0; ki < k; ++ki)
              for (std::size_t kj = 0; kj < k; ++kj) {
                const long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.pad_top);
                const long iw = static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.pad_left);
                if (ih < 0 || iw < 0 || ih >= static_cast<long>(g.in_h) || iw >= static_cast<long>(g.in_w)) continue;
                const double xv = x[((b * c + ic) * g.in_h + static_cast<std::size_t>(ih)) * g.in_w +
                                    static_cast<std::size_t>(iw)];
                acc += weight[oc * c * k * k + (ic * k + ki) * k + kj] * xv;
              }
          y[((b * o + oc) * g.out_h + oh) * g.out_w + ow] = acc;
        }
  return y;
}

double largest_singular_value(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

Eigen::MatrixXd denman_beavers_sqrt(const Eigen::MatrixXd& m, int iters) {
  Eigen::MatrixXd y = m;
  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  for (int i = 0; i < iters; ++i) {
    const Eigen::MatrixXd yi = y.inverse();
    const Eigen::MatrixXd zi = z.inverse();
    const Eigen::MatrixXd ny = 0.5 * (y + zi);
    z = 0.5 * (z + yi);
    if ((ny - y).norm() < 1e-15 * std::max(1.0, y.norm())) {
      y = ny;
      break;
    }
    y = ny;
  }
  return y;
}

std::vector<double> cosine_gram_spectrum(const Eigen::MatrixXd& rows) {
  Eigen::MatrixXd unit = rows;
  for (Eigen::Index i = 0; i < unit.rows(); ++i) unit.row(i) /= unit.row(i).norm();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(unit);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) out.push_back(std::pow(svd.singularValues()(i), 2));
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

double kid_double_sum(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int degree) {
  const double d = static_cast<double>(x.cols());
  auto k = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return std::pow(a.dot(b) / d + 1.0, degree); };
  const auto m = x.rows(), n = y.rows();
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (i != j) sxx += k(x.row(i), x.row(j));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) syy += k(y.row(i), y.row(j));
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) sxy += k(x.row(i), y.row(j));
  return sxx / static_cast<double>(m * (m - 1)) + syy / static_cast<double>(n * (n - 1)) -
         2.0 * sxy / static_cast<double>(m * n);
}

GradCheck finite_difference_check(const std::function<double()>& f, std::vector<double*> coords,
                                  const std::vector<double>& analytic, double eps, double floor) {
  if (coords.size() != analytic.size()) throw std::invalid_argument("finite_difference_check: size mismatch");
  GradCheck r;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    double* c = coords[i];
    const double orig = *c;
    *c = orig + eps;
    const double up = f();
    *c = orig - eps;
    const double down = f();
    *c = orig;
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[i];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    r.max_rel_error = std::max(r.max_rel_error, rel);
    ++r.checked;
  }
  return r;
}

}  // namespace pagan::oracles
