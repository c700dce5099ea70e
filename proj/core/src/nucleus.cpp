#include "dive/nucleus.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "dive/error.hpp"
#include "dive/rng.hpp"

namespace dive {

std::vector<int> nucleus_sample(const StepLogits& next_logits, double p,
                                std::uint64_t rng_seed, std::size_t max_len,
                                int eos_id, int bos_id) {
  if (!(p > 0.0) || p > 1.0) {
    throw DataError("nucleus p must lie in (0, 1]");
  }
  std::mt19937_64 rng(rng_seed);
  std::vector<int> sequence{bos_id};
  for (std::size_t step = 0; step < max_len; ++step) {
    const Eigen::VectorXd logits = next_logits(sequence.back());
    const double m = logits.maxCoeff();
    Eigen::VectorXd probs = (logits.array() - m).exp();
    probs /= probs.sum();

    std::vector<int> order(static_cast<std::size_t>(logits.size()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (probs(a) != probs(b)) return probs(a) > probs(b);
      return a < b;
    });

    std::size_t cut = order.size();
    double mass = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      mass += probs(order[i]);
      if (mass >= p) {
        cut = i + 1;
        break;
      }
    }

    double nucleus_mass = 0.0;
    for (std::size_t i = 0; i < cut; ++i) nucleus_mass += probs(order[i]);
    const double u = uniform_double(rng) * nucleus_mass;
    double acc = 0.0;
    int chosen = order[cut - 1];
    for (std::size_t i = 0; i < cut; ++i) {
      acc += probs(order[i]);
      if (u < acc) {
        chosen = order[i];
        break;
      }
    }

    sequence.push_back(chosen);
    if (chosen == eos_id) break;
  }
  return sequence;
}

std::vector<int> generate(const ToyModelParams& params,
                          const Eigen::VectorXd& v_h, double p,
                          std::uint64_t rng_seed, std::size_t max_len) {
  const ToyModelShapes s = params.shapes();
  if (v_h.size() != s.d_r) {
    throw DataError("conditioning vector width mismatch");
  }
  const Eigen::VectorXd cond = params.image_cond * v_h;
  auto h = std::make_shared<Eigen::VectorXd>(Eigen::VectorXd::Zero(s.d_h));
  const StepLogits step = [params, cond, h](int prev) -> Eigen::VectorXd {
    if (prev < 0 || prev >= params.token_embedding.rows()) {
      throw DataError("unknown token id " + std::to_string(prev));
    }
    const Eigen::VectorXd z =
        params.recurrence * *h +
        params.input_map * params.token_embedding.row(prev).transpose() +
        cond;
    *h = z.array().tanh();
    return params.output_map * *h;
  };
  return nucleus_sample(step, p, rng_seed, max_len);
}

}  // namespace dive
