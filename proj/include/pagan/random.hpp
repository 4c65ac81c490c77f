#pragma once

#include <cstdint>
#include <random>

namespace pagan {

// Single engine type used by every stochastic component, so that a seed fixes
// a whole run.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace pagan
