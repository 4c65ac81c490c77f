#include "pagan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pagan::metrics {

namespace {

double within_mean_offdiag(const Matrix& k) {
  const double m = static_cast<double>(k.rows());
  return (k.sum() - k.trace()) / (m * (m - 1.0));
}

Matrix poly_kernel(const Matrix& a, const Matrix& b, int degree) {
  const double d = static_cast<double>(a.cols());
  Matrix k = ((a * b.transpose()).array() / d + 1.0).matrix();
  return k.array().pow(degree).matrix();
}

void check_psd(const Matrix& cov, const char* which) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().size() > 0 && es.eigenvalues().minCoeff() < -1e-8) {
    throw std::invalid_argument(std::string("covariance ") + which + " is not positive semidefinite");
  }
}

}  // namespace

double kid_unbiased(const Matrix& x, const Matrix& y, int degree) {
  if (x.rows() < 2 || y.rows() < 2) throw std::invalid_argument("kid_unbiased needs at least 2 samples per set");
  if (x.cols() != y.cols() || x.cols() == 0) throw std::invalid_argument("kid_unbiased: feature dimensions differ");
  if (degree < 1) throw std::invalid_argument("kid_unbiased: kernel degree must be >= 1");
  const double kxx = within_mean_offdiag(poly_kernel(x, x, degree));
  const double kyy = within_mean_offdiag(poly_kernel(y, y, degree));
  const double kxy = poly_kernel(x, y, degree).mean();
  return kxx + kyy - 2.0 * kxy;
}

SampleStats sample_stats(const Matrix& samples) {
  if (samples.rows() < 2) throw std::invalid_argument("sample_stats needs at least 2 samples");
  SampleStats s;
  s.count = static_cast<std::size_t>(samples.rows());
  s.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - s.mean.transpose();
  s.cov = centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
  return s;
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  const Vector roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

double frechet_distance(const SampleStats& a, const SampleStats& b) {
  if (a.mean.size() != b.mean.size() || a.cov.rows() != b.cov.rows() || a.cov.rows() != a.mean.size() ||
      a.cov.cols() != a.cov.rows() || b.cov.cols() != b.cov.rows()) {
    throw std::invalid_argument("frechet_distance: dimension mismatch");
  }
  check_psd(a.cov, "a");
  check_psd(b.cov, "b");
  const Matrix ra = psd_sqrt(a.cov);
  Eigen::SelfAdjointEigenSolver<Matrix> es(ra * b.cov * ra, Eigen::EigenvaluesOnly);
  const double cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * cross;
}

DiversityReport gradient_diversity(const Matrix& gradients) {
  if (gradients.rows() < 4) throw std::invalid_argument("gradient_diversity needs at least 4 gradient vectors");
  const Vector norms = gradients.rowwise().norm();
  if (norms.minCoeff() <= 0.0) throw std::invalid_argument("gradient_diversity: zero-norm gradient");
  const Matrix unit = norms.cwiseInverse().asDiagonal() * gradients;
  // The Gram matrix and the scatter matrix share their nonzero spectrum.
  const Matrix gram = unit.rows() <= unit.cols() ? Matrix(unit * unit.transpose()) : Matrix(unit.transpose() * unit);
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), std::greater<>());

  DiversityReport r;
  const double cutoff = 1e-10 * std::max(ev.front(), 1.0) * static_cast<double>(gram.rows());
  for (double v : ev)
    if (v > cutoff) ++r.nonzero_eigenvalues;
  for (std::size_t i = 0; i < std::min<std::size_t>(4, ev.size()); ++i) r.top_eigenvalues.push_back(ev[i]);
  if (r.nonzero_eigenvalues < 4) {
    r.degenerate = true;
    return r;
  }
  double acc = 0.0;
  for (int i = 1; i <= 3; ++i) acc += std::sqrt(ev[0] / ev[i]);
  r.gamma_bar = acc / 3.0;
  return r;
}

}  // namespace pagan::metrics
