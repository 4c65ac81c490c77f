#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

// Sample-quality statistics on raw feature vectors and the gradient-diversity
// diagnostic. Sample sets are row-per-sample matrices.
namespace pagan::metrics {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Unbiased MMD^2 with k(a, b) = (a.b / d + 1)^degree; within-set sums skip
// the diagonal. Both sets need >= 2 rows and equal column counts.
double kid_unbiased(const Matrix& x, const Matrix& y, int degree = 3);

struct SampleStats {
  Vector mean;
  Matrix cov;  // unbiased (n - 1) normalization
  std::size_t count = 0;
};

SampleStats sample_stats(const Matrix& samples);

// ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2}). Throws on dimension
// mismatch or a covariance with an eigenvalue below -1e-8.
double frechet_distance(const SampleStats& a, const SampleStats& b);

// Symmetric PSD square root through an eigen-decomposition; negative
// eigenvalues within tolerance are clipped to zero.
Matrix psd_sqrt(const Matrix& m);

struct DiversityReport {
  double gamma_bar = 0.0;
  bool degenerate = false;
  std::size_t nonzero_eigenvalues = 0;
  std::vector<double> top_eigenvalues;  // descending, up to four
};

// Rows are gradient vectors. Works on the correlation (cosine) Gram matrix of
// the rows; gamma_bar = mean over i = 1..3 of sqrt(l_0 / l_i).
DiversityReport gradient_diversity(const Matrix& gradients);

}  // namespace pagan::metrics
