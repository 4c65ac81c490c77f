#include "pagan/prob_oracle.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pagan::prob {

namespace {

void require_same_space(const DiscreteDistribution& a, const DiscreteDistribution& b) {
  if (a.space_size() != b.space_size()) {
    throw std::invalid_argument("distributions live on spaces of different size (" +
                                std::to_string(a.space_size()) + " vs " + std::to_string(b.space_size()) + ")");
  }
}

void require_same_shape(const JointTable& p, const JointTable& q) {
  if (p.space_size != q.space_size || p.sequences != q.sequences || p.masses.size() != q.masses.size()) {
    throw std::invalid_argument("joint tables differ in shape");
  }
}

}  // namespace

DiscreteDistribution::DiscreteDistribution(std::vector<double> masses) : masses_(std::move(masses)) {
  if (masses_.empty()) throw std::invalid_argument("distribution needs a non-empty space");
  double total = 0.0;
  for (double m : masses_) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw std::invalid_argument("distribution masses must be finite and >= 0");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("distribution masses sum to " + std::to_string(total) + ", not 1");
  }
}

DiscreteDistribution random_distribution(std::size_t n, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> m(n);
  double total = 0.0;
  for (auto& v : m) total += (v = e(rng));
  for (auto& v : m) v /= total;
  return DiscreteDistribution(std::move(m));
}

double JointTable::total() const { return std::accumulate(masses.begin(), masses.end(), 0.0); }

std::vector<double> JointTable::marginal_x() const {
  std::vector<double> m(space_size, 0.0);
  for (std::size_t x = 0; x < space_size; ++x)
    for (std::size_t s = 0; s < sequences; ++s) m[x] += at(x, s);
  return m;
}

std::vector<double> JointTable::marginal_s() const {
  std::vector<double> m(sequences, 0.0);
  for (std::size_t x = 0; x < space_size; ++x)
    for (std::size_t s = 0; s < sequences; ++s) m[s] += at(x, s);
  return m;
}

JointTable embed(const DiscreteDistribution& p) {
  JointTable t;
  t.space_size = p.space_size();
  t.sequences = 1;
  t.level = 0;
  t.masses = p.masses();
  return t;
}

DiscreteDistribution mixture_marginal(const DiscreteDistribution& p_d, const DiscreteDistribution& p_g) {
  require_same_space(p_d, p_g);
  std::vector<double> m(p_d.space_size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = 0.5 * (p_d[i] + p_g[i]);
  return DiscreteDistribution(std::move(m));
}

std::pair<JointTable, JointTable> build_level_joints(const DiscreteDistribution& p_d,
                                                     const DiscreteDistribution& p_g, int level) {
  if (level < 0) throw std::invalid_argument("level must be non-negative");
  if (level > kMaxLevel) throw std::invalid_argument("level above " + std::to_string(kMaxLevel));
  require_same_space(p_d, p_g);
  JointTable p = embed(p_d);
  JointTable q = embed(p_g);
  for (int l = 1; l <= level; ++l) {
    JointTable np, nq;
    np.space_size = nq.space_size = p.space_size;
    np.sequences = nq.sequences = p.sequences * 2;
    np.level = nq.level = l;
    np.masses.assign(p.space_size * np.sequences, 0.0);
    nq.masses.assign(np.masses.size(), 0.0);
    const std::size_t high = p.sequences;  // value of the new bit s_l in the index
    for (std::size_t x = 0; x < p.space_size; ++x) {
      for (std::size_t s = 0; s < p.sequences; ++s) {
        const double pm = p.at(x, s), qm = q.at(x, s);
        np.masses[x * np.sequences + s] = 0.5 * pm;
        np.masses[x * np.sequences + s + high] = 0.5 * qm;
        nq.masses[x * nq.sequences + s] = 0.5 * qm;
        nq.masses[x * nq.sequences + s + high] = 0.5 * pm;
      }
    }
    p = std::move(np);
    q = std::move(nq);
  }
  return {std::move(p), std::move(q)};
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

double js_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("js_divergence: size mismatch");
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) js += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) js += 0.5 * q[i] * std::log(q[i] / m);
  }
  return js;
}

double js_divergence(const JointTable& p, const JointTable& q) {
  require_same_shape(p, q);
  return js_divergence(p.masses, q.masses);
}

double js_divergence(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  require_same_space(p, q);
  return js_divergence(p.masses(), q.masses());
}

double mutual_information(const JointTable& joint) {
  if (joint.sequences < 2) throw std::invalid_argument("mutual information needs at least one bit");
  const auto mx = joint.marginal_x();
  const auto ms = joint.marginal_s();
  std::vector<double> product(joint.masses.size());
  for (std::size_t x = 0; x < joint.space_size; ++x)
    for (std::size_t s = 0; s < joint.sequences; ++s) product[x * joint.sequences + s] = mx[x] * ms[s];
  return kl_divergence(joint.masses, product);
}

DiscriminatorTable optimal_discriminator(const JointTable& p, const JointTable& q) {
  require_same_shape(p, q);
  DiscriminatorTable d;
  d.space_size = p.space_size;
  d.sequences = p.sequences;
  d.values.assign(p.masses.size(), 0.0);
  d.masked.assign(p.masses.size(), 0);
  for (std::size_t i = 0; i < p.masses.size(); ++i) {
    const double total = p.masses[i] + q.masses[i];
    if (total > 0.0) {
      d.values[i] = p.masses[i] / total;
    } else {
      d.masked[i] = 1;
    }
  }
  return d;
}

std::pair<JointTable, JointTable> generic_mixture_joints(const DiscreteDistribution& p_d,
                                                         const DiscreteDistribution& p_g,
                                                         const DiscreteDistribution& p_sa,
                                                         const DiscreteDistribution& p_sb) {
  require_same_space(p_d, p_g);
  require_same_space(p_sa, p_sb);
  if (p_sa == p_sb) throw std::invalid_argument("P_sa equals P_sb: the augmentation carries no information");
  JointTable p, q;
  p.space_size = q.space_size = p_d.space_size();
  p.sequences = q.sequences = p_sa.space_size();
  const std::size_t seq = p.sequences;
  p.level = q.level = (seq & (seq - 1)) == 0 ? static_cast<int>(std::log2(static_cast<double>(seq))) : 0;
  p.masses.assign(p.space_size * seq, 0.0);
  q.masses.assign(p.masses.size(), 0.0);
  for (std::size_t x = 0; x < p.space_size; ++x) {
    for (std::size_t s = 0; s < seq; ++s) {
      p.masses[x * seq + s] = 0.5 * (p_d[x] * p_sa[s] + p_g[x] * p_sb[s]);
      q.masses[x * seq + s] = 0.5 * (p_d[x] * p_sb[s] + p_g[x] * p_sa[s]);
    }
  }
  return {std::move(p), std::move(q)};
}

ChainReport verify_equality_chain(const DiscreteDistribution& p_d, const DiscreteDistribution& p_g,
                                  int max_level, double tol) {
  if (max_level < 1) throw std::invalid_argument("max_level must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  ChainReport r;
  r.base_js = js_divergence(p_d, p_g);
  for (int l = 1; l <= max_level; ++l) {
    const auto [p, q] = build_level_joints(p_d, p_g, l);
    const double js = js_divergence(p, q);
    r.level_js.push_back(js);
    r.deviations.push_back(std::abs(js - r.base_js));
    r.max_deviation = std::max(r.max_deviation, r.deviations.back());
  }
  r.passed = r.max_deviation < tol;
  return r;
}

}  // namespace pagan::prob
