#include "dive/optimizer.hpp"

#include <cmath>

#include "dive/error.hpp"

namespace dive {

AdamWState AdamWState::init(const ToyModelParams& params) {
  AdamWState state;
  state.m.reserve(ToyModelParams::kTensorCount);
  state.v.reserve(ToyModelParams::kTensorCount);
  for (std::size_t t = 0; t < ToyModelParams::kTensorCount; ++t) {
    const Eigen::MatrixXd& p = params.tensor(t);
    state.m.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    state.v.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
  }
  return state;
}

void adamw_step(ToyModelParams& params, const Gradients& grads,
                AdamWState& state, const AdamWConfig& cfg) {
  if (state.m.size() != ToyModelParams::kTensorCount) {
    throw DataError("optimizer state not initialized for this model");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  for (std::size_t t = 0; t < ToyModelParams::kTensorCount; ++t) {
    Eigen::MatrixXd& p = params.tensor(t);
    const Eigen::MatrixXd& g = grads.tensor(t);
    if (g.rows() != p.rows() || g.cols() != p.cols()) {
      throw DataError("gradient shape mismatch for tensor " +
                      std::string(ToyModelParams::tensor_name(t)));
    }
    Eigen::MatrixXd& m = state.m[t];
    Eigen::MatrixXd& v = state.v[t];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    const Eigen::MatrixXd m_hat = m / bc1;
    const Eigen::MatrixXd v_hat = v / bc2;
    p.array() -= cfg.lr * cfg.weight_decay * p.array();
    p.array() -= cfg.lr * m_hat.array() / (v_hat.array().sqrt() + cfg.eps);
  }
}

}  // namespace dive
