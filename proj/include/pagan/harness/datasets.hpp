#pragma once

#include <string>
#include <vector>

#include "pagan/nn/tensor.hpp"
#include "pagan/random.hpp"

namespace pagan::harness {

// ring8: eight Gaussians on a circle of radius 2, sd 0.02.
// grid25: 5x5 Gaussians at integer points of [-2, 2]^2, sd 0.02.
// synth_patterns_8x8: eight two-tone 8x8 prototypes (+-0.9) with sd 0.05 noise.
bool known_dataset(const std::string& name);
nn::Shape sample_shape(const std::string& name);
std::size_t mode_count(const std::string& name);

// n fresh samples, [n, sample_shape...].
nn::Tensor draw_samples(const std::string& name, std::size_t n, Rng& rng);

// A finite sample set with uniform mini-batch draws (with replacement).
class FiniteDataset {
 public:
  FiniteDataset(const std::string& name, std::size_t size, Rng& rng);

  const nn::Tensor& samples() const { return samples_; }
  std::size_t size() const { return samples_.dim(0); }
  nn::Tensor batch(std::size_t n, Rng& rng) const;
  // The first n samples (all when n >= size).
  nn::Tensor head(std::size_t n) const;

 private:
  nn::Tensor samples_;
};

}  // namespace pagan::harness
