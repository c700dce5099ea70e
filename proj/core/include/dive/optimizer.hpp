#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dive/toy_model.hpp"

namespace dive {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWState {
  std::vector<Eigen::MatrixXd> m;  // first moments, one per tensor
  std::vector<Eigen::MatrixXd> v;  // second moments
  std::int64_t step = 0;

  static AdamWState init(const ToyModelParams& params);
};

// Decoupled weight decay: the decay shrinks parameters directly and never
// enters the moment estimates.
void adamw_step(ToyModelParams& params, const Gradients& grads,
                AdamWState& state, const AdamWConfig& cfg);

}  // namespace dive
