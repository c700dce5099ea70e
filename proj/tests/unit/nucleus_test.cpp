#include <doctest.h>

#include <cmath>
#include <map>

#include "dive/error.hpp"
#include "dive/nucleus.hpp"

using dive::nucleus_sample;
using dive::StepLogits;
using dive::ToyModelParams;
using dive::ToyVocab;

namespace {

StepLogits constant_logits(Eigen::VectorXd logits) {
  return [logits](int) { return logits; };
}

}  // namespace

TEST_CASE("a dominant token makes the step greedy") {
  Eigen::VectorXd logits = Eigen::VectorXd::Zero(5);
  logits(3) = 50.0;  // holds essentially all probability mass
  const auto seq = nucleus_sample(constant_logits(logits), 0.9, 1, 4);
  REQUIRE(seq.size() == 5);
  CHECK(seq[0] == ToyVocab::kBos);
  for (std::size_t i = 1; i < seq.size(); ++i) {
    CHECK(seq[i] == 3);
  }
}

TEST_CASE("generation stops at eos") {
  Eigen::VectorXd logits = Eigen::VectorXd::Zero(5);
  logits(ToyVocab::kEos) = 50.0;
  const auto seq = nucleus_sample(constant_logits(logits), 0.9, 1, 10);
  CHECK(seq == std::vector<int>{ToyVocab::kBos, ToyVocab::kEos});
}

TEST_CASE("p = 1 samples from the full distribution") {
  // Two equally likely tokens; with full-distribution sampling both appear.
  Eigen::VectorXd logits(4);
  logits << -100.0, -100.0, 3.0, 3.0;
  std::map<int, int> seen;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    const auto seq = nucleus_sample(constant_logits(logits), 1.0, seed, 1);
    REQUIRE(seq.size() == 2);
    ++seen[seq[1]];
  }
  CHECK(seen[2] > 8);
  CHECK(seen[3] > 8);
}

TEST_CASE("truncation drops the tail outside the nucleus") {
  // probs ~ {0.7, 0.2, 0.1}: with p = 0.8 the nucleus is {0, 1}; token 2
  // can never be drawn.
  Eigen::VectorXd logits(3);
  logits << std::log(0.7), std::log(0.2), std::log(0.1);
  for (std::uint64_t seed = 0; seed < 128; ++seed) {
    const auto seq = nucleus_sample(constant_logits(logits), 0.8, seed, 1);
    CHECK(seq[1] != 2);
  }
}

TEST_CASE("fixed seed reproduces the sequence") {
  const ToyModelParams p =
      ToyModelParams::random({8, 4, 4, 4, 4}, 99, 0.8);
  Eigen::VectorXd v_h(4);
  v_h << 0.2, -0.4, 0.6, 0.1;
  const auto a = dive::generate(p, v_h, 0.9, 1234, 12);
  const auto b = dive::generate(p, v_h, 0.9, 1234, 12);
  const auto c = dive::generate(p, v_h, 0.9, 4321, 12);
  CHECK(a == b);
  CHECK(a.size() <= 13);
  CHECK(a.front() == ToyVocab::kBos);
  // Different seeds are allowed to coincide, but across a few lengths the
  // streams should diverge somewhere.
  bool any_diff = c != a;
  for (std::uint64_t s = 0; s < 4 && !any_diff; ++s) {
    any_diff = dive::generate(p, v_h, 0.9, s, 12) !=
               dive::generate(p, v_h, 0.9, s + 100, 12);
  }
  CHECK(any_diff);
}

TEST_CASE("invalid p is rejected") {
  Eigen::VectorXd logits = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(nucleus_sample(constant_logits(logits), 0.0, 1, 4),
                  dive::DataError);
  CHECK_THROWS_AS(nucleus_sample(constant_logits(logits), 1.5, 1, 4),
                  dive::DataError);
}
