#include "dive/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dive/rng.hpp"

namespace dive {
namespace {

double loss_at(const ContrastiveBatchItem& item, const ToyModelParams& params,
               double lambda) {
  return total_loss(item, params, lambda).l_total;
}

ContrastiveBatchItem random_item(std::mt19937_64& rng, int d_img, int vocab,
                                 std::size_t h_size, bool padded,
                                 bool flagged) {
  ContrastiveBatchItem item;
  for (std::size_t i = 0; i < h_size; ++i) {
    Eigen::VectorXd row(d_img);
    for (int d = 0; d < d_img; ++d) {
      row(d) = 2.0 * uniform_double(rng) - 1.0;
    }
    item.images.push_back(std::move(row));
    item.image_ids.push_back("img" + std::to_string(i));
  }
  item.positive_index = uniform_below(rng, h_size);
  const std::size_t content = 1 + uniform_below(rng, 3);
  item.tokens.push_back(ToyVocab::kBos);
  for (std::size_t i = 0; i < content; ++i) {
    // Content ids lie beyond the three reserved markers.
    item.tokens.push_back(
        3 + static_cast<int>(uniform_below(rng, std::uint64_t(vocab - 3))));
  }
  item.tokens.push_back(ToyVocab::kEos);
  if (padded) {
    item.tokens.push_back(ToyVocab::kPad);
    item.tokens.push_back(ToyVocab::kPad);
  }
  item.crl_enabled = !flagged;
  return item;
}

}  // namespace

double max_relative_gradient_error(const ContrastiveBatchItem& item,
                                   const ToyModelParams& params,
                                   double lambda, double fd_step,
                                   std::string* worst_tensor) {
  const Gradients analytic = backward(item, params, lambda);
  double worst = 0.0;
  for (std::size_t t = 0; t < ToyModelParams::kTensorCount; ++t) {
    const Eigen::MatrixXd& a = analytic.tensor(t);
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      for (Eigen::Index c = 0; c < a.cols(); ++c) {
        ToyModelParams probe = params;
        probe.tensor(t)(r, c) = params.tensor(t)(r, c) + fd_step;
        const double plus = loss_at(item, probe, lambda);
        probe.tensor(t)(r, c) = params.tensor(t)(r, c) - fd_step;
        const double minus = loss_at(item, probe, lambda);
        const double fd = (plus - minus) / (2.0 * fd_step);
        const double denom =
            std::max({std::abs(a(r, c)), std::abs(fd), 1e-8});
        const double rel = std::abs(a(r, c) - fd) / denom;
        if (rel > worst) {
          worst = rel;
          if (worst_tensor != nullptr) {
            *worst_tensor = std::string(ToyModelParams::tensor_name(t));
          }
        }
      }
    }
  }
  return worst;
}

GradCheckReport run_gradient_check(const GradCheckConfig& config) {
  GradCheckReport report;
  for (int trial = 0; trial < config.trials; ++trial) {
    const std::uint64_t seed = derive_seed(config.seed, std::uint64_t(trial));
    std::mt19937_64 rng(seed);

    ToyModelShapes shapes;
    shapes.vocab = 6 + static_cast<int>(uniform_below(rng, 7));  // 6..12
    shapes.d_e = 4;
    shapes.d_h = 4;
    shapes.d_r = 4;
    shapes.d_img = 6;
    const ToyModelParams params =
        ToyModelParams::random(shapes, rng(), 0.4);

    const bool padded = trial % 2 == 1;
    const bool flagged = trial % 5 == 3;
    const double lambda = trial % 3 == 2 ? 0.0 : 0.5;
    const ContrastiveBatchItem item =
        random_item(rng, shapes.d_img, shapes.vocab, 3, padded, flagged);

    GradCheckTrial result;
    result.seed = seed;
    result.lambda = lambda;
    result.max_rel_error = max_relative_gradient_error(
        item, params, lambda, config.fd_step, &result.worst_tensor);
    if (result.max_rel_error > report.max_rel_error) {
      report.max_rel_error = result.max_rel_error;
      report.worst_tensor = result.worst_tensor;
    }
    report.trials.push_back(std::move(result));
  }
  return report;
}

}  // namespace dive
