#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tse/gan.hpp"
#include "tse/lstm.hpp"

namespace tse {

// Central finite differences with this epsilon arbitrate every analytic
// gradient in the project.
inline constexpr double kFdEpsilon = 1e-5;

// |a-n| / max(|a|,|n|), with an absolute floor so that near-zero pairs with
// rounding-level disagreement do not register as failures.
double gradient_relative_error(double analytic, double numeric);

struct GradCheckFamily {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckFamily> families;  // the 12 weight/bias families plus d_input
  double lstm_max = 0.0;
  double generator_through_discriminator_max = 0.0;
  double z_gradient_max = 0.0;
  std::size_t instances = 0;

  double overall_max() const;
  bool pass(double tolerance) const { return overall_max() < tolerance; }
};

struct GradCheckOptions {
  std::vector<std::size_t> hidden_sizes = {1, 2, 4, 8};
  std::vector<std::size_t> input_sizes = {1, 3};
  std::vector<std::size_t> step_counts = {1, 2, 5, 10};
  std::size_t seeds_per_combo = 4;
  std::size_t composed_instances = 20;
  std::uint64_t seed = 20240101;
  // Test hook: flips one analytic gradient entry so a broken backward pass is
  // visibly detected.
  bool corrupt_gradient = false;
};

// Checks lstm_backward against finite differences of the forward pass, then
// the composed paths: generator parameters through the frozen discriminator,
// and the total estimation loss with respect to z.
GradCheckReport run_gradcheck(const GradCheckOptions& options);

void print_gradcheck_report(const GradCheckReport& report, double tolerance);

}  // namespace tse
