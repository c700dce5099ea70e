#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace dive {

/// Token table for the toy decoder. Ids are dense; 0/1/2 are reserved for
/// the sequence markers and the remaining ids follow in lexicographic token
/// order, so a vocabulary is a pure function of its corpus.
class ToyVocab {
 public:
  static constexpr int kBos = 0;
  static constexpr int kEos = 1;
  static constexpr int kPad = 2;

  static ToyVocab build(std::span<const std::string> texts);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_.at(id); }
  int id_of(const std::string& token) const;  // throws DataError on OOV

  // BOS + token ids + EOS.
  std::vector<int> encode(std::string_view text) const;
  std::string decode(std::span<const int> ids) const;  // skips markers

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct ToyModelShapes {
  int vocab = 0;
  int d_e = 0;    // token embedding width
  int d_h = 0;    // decoder hidden width
  int d_r = 0;    // shared retrieval space width
  int d_img = 0;  // raw image feature width
};

/// All trainable tensors of the toy encoder/decoder, binary64 throughout.
///
/// The decoder is a single tanh recurrence conditioned on the projected
/// image: h_i = tanh(A h_{i-1} + B Emb[w_i] + C V_h), logits_i = U h_i,
/// with V_h = Pv r averaged over feature rows and T_s the mean of Pt h_i
/// over non-PAD steps. One V_h feeds both conditioning and the cosine.
struct ToyModelParams {
  Eigen::MatrixXd token_embedding;  // vocab x d_e
  Eigen::MatrixXd recurrence;       // d_h x d_h
  Eigen::MatrixXd input_map;        // d_h x d_e
  Eigen::MatrixXd image_cond;       // d_h x d_r
  Eigen::MatrixXd output_map;       // vocab x d_h
  Eigen::MatrixXd text_proj;        // d_r x d_h
  Eigen::MatrixXd image_proj;       // d_r x d_img

  static constexpr std::size_t kTensorCount = 7;
  Eigen::MatrixXd& tensor(std::size_t i);
  const Eigen::MatrixXd& tensor(std::size_t i) const;
  static std::string_view tensor_name(std::size_t i);

  ToyModelShapes shapes() const;
  static ToyModelParams zeros(const ToyModelShapes& s);
  static ToyModelParams random(const ToyModelShapes& s, std::uint64_t seed,
                               double scale = 0.2);

  // Versioned binary dump: magic "DIVETOY1", u32-LE shape header, then the
  // tensors row-major as binary64-LE in declaration order.
  void save(const std::filesystem::path& file) const;
  static ToyModelParams load(const std::filesystem::path& file);
};

// Same shapes as the parameters they differentiate.
using Gradients = ToyModelParams;

/// One training example: the similar-image set H (one collapsed feature row
/// per member), the positive index, and the token sequence of the inference
/// uniquely tied to the positive. crl_enabled is false when no uniquely
/// related description exists, which suppresses the contrastive term.
struct ContrastiveBatchItem {
  std::vector<Eigen::VectorXd> images;  // H, each d_img
  std::vector<std::string> image_ids;   // parallel to images
  std::size_t positive_index = 0;
  std::vector<int> tokens;  // BOS ... EOS, PAD only after EOS
  std::string text;
  bool crl_enabled = true;
};

struct LossBreakdown {
  double l_org = 0.0;
  double l_crl = 0.0;
  double lambda = 0.0;
  double l_total = 0.0;  // l_org + lambda * l_crl, exactly
};

// V_h: mean over feature rows of Pv r.
Eigen::VectorXd encode_image(std::span<const Eigen::VectorXd> feature_rows,
                             const ToyModelParams& params);

struct DecodeTrace {
  Eigen::MatrixXd hidden;  // d_h x steps, column j is h_{j+1}
  Eigen::MatrixXd logits;  // vocab x steps
  std::vector<bool> active;  // step predicts a non-PAD target
  std::size_t active_count = 0;
};

// Runs the recurrence over tokens[0..n-2], predicting tokens[1..n-1].
// Requires tokens to start with BOS and contain ids within the vocabulary.
DecodeTrace decode_text(std::span<const int> tokens,
                        const Eigen::VectorXd& v_h,
                        const ToyModelParams& params);

// T_s: mean of Pt h_i over active (non-PAD-target) steps.
Eigen::VectorXd text_representation(const DecodeTrace& trace,
                                    const ToyModelParams& params);

// sigma(h, s) = exp(cos(V_h, T_s)), in [1/e, e].
double agreement(const Eigen::VectorXd& image_repr,
                 const Eigen::VectorXd& text_repr);

// -log(sigma_p / sum_i sigma_i) over H, computed as a log-sum-exp of
// cosines. Positive, and at most log|H| + 2.
double contrastive_loss(const ContrastiveBatchItem& item,
                        const ToyModelParams& params);

// Token-level cross entropy summed over steps predicting w_1..EOS; PAD
// targets are excluded. Requires tokens = BOS ... EOS [PAD...].
double lm_loss(std::span<const int> tokens, const Eigen::VectorXd& v_h,
               const ToyModelParams& params);

// l_org(h_p, s_p) + lambda * l_crl(h_p, s_p, H); the contrastive term is
// computed from the same forward pass that produced the LM loss.
LossBreakdown total_loss(const ContrastiveBatchItem& item,
                         const ToyModelParams& params, double lambda);

// Exact analytic gradient of total_loss w.r.t. every tensor, including the
// paths through the shared decoder states into both loss terms. When
// `loss_out` is non-null the losses from the shared pass are stored there.
Gradients backward(const ContrastiveBatchItem& item,
                   const ToyModelParams& params, double lambda,
                   LossBreakdown* loss_out = nullptr);

}  // namespace dive
