#pragma once

#include <vector>

#include "pagan/nn/autograd.hpp"
#include "pagan/random.hpp"

namespace pagan::nn {

struct SpectralNormResult {
  Tensor normalized;
  double sigma = 0.0;
  bool degenerate = false;  // sigma == 0; weight returned unchanged
};

// Random unit vector with one entry per weight row.
std::vector<double> init_power_vector(std::size_t rows, Rng& rng);

// Runs `iters` power iterations on the 2-D `weight`, persisting the left
// vector in `u`, and divides the weight by the estimate sigma = ||W^T u||.
SpectralNormResult spectral_normalize(const Tensor& weight, int iters, std::vector<double>& u);

// Differentiable W / sigma(W) with sigma = ||W^T u|| for the (post-update) u
// held fixed; d sigma / dW = u v^T with v = W^T u / sigma. update_iters = 0
// leaves u untouched.
Var spectral_normalized(const Var& weight, std::vector<double>& u, int update_iters);

}  // namespace pagan::nn
