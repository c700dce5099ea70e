#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dive/toy_model.hpp"

namespace dive {

// Produces the logits for the step that follows `prev_token`; stateful
// callables carry the decoder recurrence.
using StepLogits = std::function<Eigen::VectorXd(int prev_token)>;

/// Top-p decoding: at each step, sample from the smallest set of tokens
/// whose probability mass reaches p (descending probability, ties by token
/// id), renormalized. p = 1 keeps the full distribution; a single token
/// holding mass >= p makes the step greedy. Stops at EOS or after max_len
/// generated tokens. The returned sequence includes BOS and, when reached,
/// EOS.
std::vector<int> nucleus_sample(const StepLogits& next_logits, double p,
                                std::uint64_t rng_seed, std::size_t max_len,
                                int eos_id = ToyVocab::kEos,
                                int bos_id = ToyVocab::kBos);

// Convenience wrapper running the toy decoder conditioned on v_h.
std::vector<int> generate(const ToyModelParams& params,
                          const Eigen::VectorXd& v_h, double p,
                          std::uint64_t rng_seed, std::size_t max_len);

}  // namespace dive
