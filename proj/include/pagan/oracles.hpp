#pragma once

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pagan/nn/layers.hpp"
#include "pagan/prob_oracle.hpp"

// Slow independent reference implementations used to check the library.
namespace pagan::oracles {

// JS through entropies: H(m) - (H(p) + H(q)) / 2.
double js_by_entropy(const std::vector<double>& p, const std::vector<double>& q);

// Closed-form level-l tables: cell (x, s) carries P_d(x) / 2^l when the
// parity of s is even and P_g(x) / 2^l otherwise (swapped for Q).
std::pair<prob::JointTable, prob::JointTable> joints_by_parity(const prob::DiscreteDistribution& p_d,
                                                                const prob::DiscreteDistribution& p_g,
                                                                int level);

// Direct nested-loop 2-D convolution, x: [N,C,H,W], weight: [O, C*k*k].
nn::Tensor naive_conv2d(const nn::Tensor& x, const nn::Tensor& weight, const nn::Tensor& bias,
                        const nn::ConvGeometry& g);

double largest_singular_value(const Eigen::MatrixXd& m);

// Denman-Beavers iteration for the principal square root.
Eigen::MatrixXd denman_beavers_sqrt(const Eigen::MatrixXd& m, int iters = 100);

// Squared singular values of the row-normalized matrix, descending.
std::vector<double> cosine_gram_spectrum(const Eigen::MatrixXd& rows);

double kid_double_sum(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int degree = 3);

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Central differences of f around `x` (perturbed in place and restored)
// against `analytic`. rel = |a - n| / max(|a|, |n|, floor).
GradCheck finite_difference_check(const std::function<double()>& f, std::vector<double*> coords,
                                  const std::vector<double>& analytic, double eps = 1e-5, double floor = 1e-6);

}  // namespace pagan::oracles
