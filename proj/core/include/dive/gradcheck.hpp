#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dive/toy_model.hpp"

namespace dive {

// Largest relative deviation between the analytic gradient and central
// finite differences of total_loss, over every coordinate of every tensor.
// Relative error uses max(|analytic|, |finite difference|, 1e-8) as the
// denominator. The finite-difference side only ever evaluates the forward
// loss, so it is independent of the backward implementation it checks.
double max_relative_gradient_error(const ContrastiveBatchItem& item,
                                   const ToyModelParams& params,
                                   double lambda, double fd_step,
                                   std::string* worst_tensor = nullptr);

struct GradCheckConfig {
  std::uint64_t seed = 7;
  int trials = 5;
  double fd_step = 1e-5;
  double tolerance = 1e-5;
};

struct GradCheckTrial {
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double max_rel_error = 0.0;
  std::string worst_tensor;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::vector<GradCheckTrial> trials;
  bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

// Random small instances (vocab <= 12, d_e = d_h = d_r = 4, d_img = 6,
// |H| = 3, sequence length <= 5) covering padded sequences, flagged items
// and both lambda arms.
GradCheckReport run_gradient_check(const GradCheckConfig& config = {});

}  // namespace dive
