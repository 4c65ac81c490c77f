#pragma once

#include <string>
#include <vector>

namespace pagan::harness {

struct CheckResult {
  std::string name;
  bool passed = false;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

// lemma1, theorem1, proposition1, checksum, augment_identity, gradients,
// estimators, all.
const std::vector<std::string>& verify_selectors();

// Fixed seeds throughout. Throws std::invalid_argument on an unknown selector.
std::vector<CheckResult> run_verify(const std::string& selector);

// Individual checks, shared with the acceptance tests.
CheckResult check_lemma1(int pairs = 100, std::size_t space = 5, int max_level = 4);
CheckResult check_theorem1(int max_level = 6);
CheckResult check_proposition1();
CheckResult check_checksum_recursion(int max_level = 8);
CheckResult check_zero_bit_level_up();
CheckResult check_conv_decomposition(int cases = 100);
CheckResult check_layer_gradients();
CheckResult check_loss_gradients();
CheckResult check_spectral_norm(int matrices = 100);
CheckResult check_kid_oracle();
CheckResult check_frechet_oracle();
CheckResult check_gradient_diversity_oracle();

std::string format_check(const CheckResult& r);

}  // namespace pagan::harness
