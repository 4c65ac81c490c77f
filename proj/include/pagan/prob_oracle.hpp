#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "pagan/random.hpp"

// Exact finite-space distributions, the paired joint tables over
// (sample, bit sequence) and their divergences. Natural log throughout.
namespace pagan::prob {

inline constexpr int kMaxLevel = 20;

class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;
  // Throws std::invalid_argument on negative masses or a total off 1 by > 1e-12.
  explicit DiscreteDistribution(std::vector<double> masses);

  std::size_t space_size() const { return masses_.size(); }
  const std::vector<double>& masses() const { return masses_; }
  double operator[](std::size_t i) const { return masses_[i]; }

  friend bool operator==(const DiscreteDistribution&, const DiscreteDistribution&) = default;

 private:
  std::vector<double> masses_;
};

// Flat Dirichlet(1) draw on n points.
DiscreteDistribution random_distribution(std::size_t n, Rng& rng);

// Mass over x in [0, space_size) and s in [0, sequences); cell (x, s) is
// stored at x * sequences + s. For bit tables s is the integer index of the
// sequence with s_1 as its least significant bit.
struct JointTable {
  std::size_t space_size = 0;
  std::size_t sequences = 1;
  int level = 0;  // log2(sequences) for bit tables
  std::vector<double> masses;

  double at(std::size_t x, std::size_t s) const { return masses[x * sequences + s]; }
  double total() const;
  std::vector<double> marginal_x() const;
  std::vector<double> marginal_s() const;
};

JointTable embed(const DiscreteDistribution& p);

DiscreteDistribution mixture_marginal(const DiscreteDistribution& p_d, const DiscreteDistribution& p_g);

// Level 0 returns (P_d, P_g); each further level splits every cell on the new
// bit: P' = P.[s=0]/2 + Q.[s=1]/2 and Q' = Q.[s=0]/2 + P.[s=1]/2.
std::pair<JointTable, JointTable> build_level_joints(const DiscreteDistribution& p_d,
                                                     const DiscreteDistribution& p_g, int level);

// KL(p || q) over aligned mass vectors; +inf when q = 0 < p somewhere.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);
double js_divergence(const std::vector<double>& p, const std::vector<double>& q);
double js_divergence(const JointTable& p, const JointTable& q);
double js_divergence(const DiscreteDistribution& p, const DiscreteDistribution& q);

// KL(joint || marginal_x x marginal_s); needs at least two sequences.
double mutual_information(const JointTable& joint);

struct DiscriminatorTable {
  std::size_t space_size = 0;
  std::size_t sequences = 1;
  std::vector<double> values;        // p / (p + q)
  std::vector<std::uint8_t> masked;  // 1 where p + q == 0
  double at(std::size_t x, std::size_t s) const { return values[x * sequences + s]; }
  bool is_masked(std::size_t x, std::size_t s) const { return masked[x * sequences + s] != 0; }
};

DiscriminatorTable optimal_discriminator(const JointTable& p, const JointTable& q);

// P = (P_d x P_sa + P_g x P_sb)/2 and Q = (P_d x P_sb + P_g x P_sa)/2.
std::pair<JointTable, JointTable> generic_mixture_joints(const DiscreteDistribution& p_d,
                                                         const DiscreteDistribution& p_g,
                                                         const DiscreteDistribution& p_sa,
                                                         const DiscreteDistribution& p_sb);

struct ChainReport {
  double base_js = 0.0;
  std::vector<double> level_js;    // index l-1
  std::vector<double> deviations;  // |JS_l - base_js|
  double max_deviation = 0.0;
  bool passed = false;
};

ChainReport verify_equality_chain(const DiscreteDistribution& p_d, const DiscreteDistribution& p_g,
                                  int max_level, double tol);

}  // namespace pagan::prob
