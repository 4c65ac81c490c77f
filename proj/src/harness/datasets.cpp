#include "pagan/harness/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pagan::harness {

namespace {

constexpr double kMixtureSd = 0.02;
constexpr double kPatternSd = 0.05;
constexpr double kTone = 0.9;

// Prototype p at pixel (r, c): +tone or -tone.
bool pattern_on(std::size_t p, std::size_t r, std::size_t c) {
  switch (p) {
    case 0: return r < 4;                      // top half
    case 1: return c < 4;                      // left half
    case 2: return (r + c) % 2 == 0;           // pixel checkerboard
    case 3: return ((r / 2) + (c / 2)) % 2 == 0;  // 2x2 checkerboard
    case 4: return r % 2 == 0;                 // horizontal stripes
    case 5: return c % 2 == 0;                 // vertical stripes
    case 6: return r >= 2 && r < 6 && c >= 2 && c < 6;  // centered square
    default: return r == c || r + c == 7;      // diagonals
  }
}

}  // namespace

bool known_dataset(const std::string& name) {
  return name == "ring8" || name == "grid25" || name == "synth_patterns_8x8";
}

nn::Shape sample_shape(const std::string& name) {
  if (name == "ring8" || name == "grid25") return {2};
  if (name == "synth_patterns_8x8") return {1, 8, 8};
  throw std::invalid_argument("unknown dataset '" + name + "'");
}

std::size_t mode_count(const std::string& name) {
  if (name == "ring8" || name == "synth_patterns_8x8") return 8;
  if (name == "grid25") return 25;
  throw std::invalid_argument("unknown dataset '" + name + "'");
}

nn::Tensor draw_samples(const std::string& name, std::size_t n, Rng& rng) {
  nn::Shape shape{n};
  const auto per = sample_shape(name);
  shape.insert(shape.end(), per.begin(), per.end());
  nn::Tensor out(shape);
  const std::size_t modes = mode_count(name);
  std::uniform_int_distribution<std::size_t> pick(0, modes - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = pick(rng);
    if (name == "ring8") {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(m) / 8.0;
      out[2 * i] = 2.0 * std::cos(angle) + kMixtureSd * standard_normal(rng);
      out[2 * i + 1] = 2.0 * std::sin(angle) + kMixtureSd * standard_normal(rng);
    } else if (name == "grid25") {
      out[2 * i] = static_cast<double>(m % 5) - 2.0 + kMixtureSd * standard_normal(rng);
      out[2 * i + 1] = static_cast<double>(m / 5) - 2.0 + kMixtureSd * standard_normal(rng);
    } else {
      for (std::size_t r = 0; r < 8; ++r)
        for (std::size_t c = 0; c < 8; ++c)
          out[i * 64 + r * 8 + c] = (pattern_on(m, r, c) ? kTone : -kTone) + kPatternSd * standard_normal(rng);
    }
  }
  return out;
}

FiniteDataset::FiniteDataset(const std::string& name, std::size_t size, Rng& rng)
    : samples_(draw_samples(name, size, rng)) {
  if (size == 0) throw std::invalid_argument("dataset size must be positive");
}

nn::Tensor FiniteDataset::batch(std::size_t n, Rng& rng) const {
  const std::size_t row = samples_.size() / size();
  nn::Shape shape = samples_.shape();
  shape[0] = n;
  nn::Tensor out(shape);
  std::uniform_int_distribution<std::size_t> pick(0, size() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = pick(rng);
    std::copy_n(samples_.data() + j * row, row, out.data() + i * row);
  }
  return out;
}

nn::Tensor FiniteDataset::head(std::size_t n) const {
  n = std::min(n, size());
  const std::size_t row = samples_.size() / size();
  nn::Shape shape = samples_.shape();
  shape[0] = n;
  return nn::Tensor(shape, std::vector<double>(samples_.data(), samples_.data() + n * row));
}

}  // namespace pagan::harness
