#include "dive/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>

#include "dive/error.hpp"
#include "dive/text.hpp"

namespace dive {
namespace {

constexpr char kMagic[8] = {'D', 'I', 'V', 'E', 'T', 'O', 'Y', '1'};
constexpr const char* kMarkers[3] = {"<bos>", "<eos>", "<pad>"};

void write_u32_le(std::ostream& out, std::uint32_t v) {
  const unsigned char buf[4] = {
      static_cast<unsigned char>(v & 0xFF),
      static_cast<unsigned char>((v >> 8) & 0xFF),
      static_cast<unsigned char>((v >> 16) & 0xFF),
      static_cast<unsigned char>((v >> 24) & 0xFF),
  };
  out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32_le(std::istream& in, const char* what) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (!in) {
    throw DataError(std::string("truncated payload reading ") + what);
  }
  return std::uint32_t(buf[0]) | (std::uint32_t(buf[1]) << 8) |
         (std::uint32_t(buf[2]) << 16) | (std::uint32_t(buf[3]) << 24);
}

void write_f64_le(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) {
    buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(buf), 8);
}

double read_f64_le(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) {
    throw DataError("truncated tensor payload");
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= std::uint64_t(buf[i]) << (8 * i);
  }
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Validates BOS ... EOS [PAD ...] and id range; returns the step count.
std::size_t validate_sequence(std::span<const int> tokens, int vocab,
                              bool require_eos) {
  if (tokens.size() < 2) {
    throw DataError("token sequence needs at least BOS and one target");
  }
  if (tokens[0] != ToyVocab::kBos) {
    throw DataError("token sequence must start with BOS");
  }
  bool seen_eos = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int id = tokens[i];
    if (id < 0 || id >= vocab) {
      throw DataError("unknown token id " + std::to_string(id));
    }
    if (seen_eos && id != ToyVocab::kPad) {
      throw DataError("only PAD may follow EOS");
    }
    if (!seen_eos && id == ToyVocab::kPad) {
      throw DataError("PAD before EOS");
    }
    if (id == ToyVocab::kEos) seen_eos = true;
  }
  if (require_eos && !seen_eos) {
    throw DataError("token sequence must contain EOS");
  }
  return tokens.size() - 1;
}

double vector_norm_checked(const Eigen::VectorXd& v, const char* what) {
  const double n = v.norm();
  if (!(n > 0.0)) {
    throw NumericError(std::string("zero-norm ") + what +
                       " in agreement computation");
  }
  return n;
}

struct CosineGrad {
  double value = 0.0;
  Eigen::VectorXd d_left;
  Eigen::VectorXd d_right;
};

CosineGrad cosine_with_grad(const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b) {
  const double na = vector_norm_checked(a, "image representation");
  const double nb = vector_norm_checked(b, "text representation");
  CosineGrad out;
  out.value = a.dot(b) / (na * nb);
  out.d_left = b / (na * nb) - out.value * a / (na * na);
  out.d_right = a / (na * nb) - out.value * b / (nb * nb);
  return out;
}

struct ContrastiveForward {
  std::vector<double> cosines;
  std::vector<double> softmax;
  double loss = 0.0;
};

// Log-sum-exp over cosines keeps the ratio of agreements stable without
// ever forming exp(cos) explicitly.
ContrastiveForward contrastive_forward(const std::vector<double>& cosines,
                                       std::size_t positive) {
  ContrastiveForward out;
  out.cosines = cosines;
  const double m = *std::max_element(cosines.begin(), cosines.end());
  double sum = 0.0;
  for (const double c : cosines) sum += std::exp(c - m);
  const double lse = m + std::log(sum);
  out.softmax.resize(cosines.size());
  for (std::size_t i = 0; i < cosines.size(); ++i) {
    out.softmax[i] = std::exp(cosines[i] - lse);
  }
  out.loss = lse - cosines[positive];
  return out;
}

}  // namespace

ToyVocab ToyVocab::build(std::span<const std::string> texts) {
  std::set<std::string> seen;
  for (const std::string& text : texts) {
    for (std::string& tok : tokenize(text)) {
      for (const char* marker : kMarkers) {
        if (tok == marker) {
          throw DataError("corpus token collides with marker " + tok);
        }
      }
      seen.insert(std::move(tok));
    }
  }
  ToyVocab v;
  v.tokens_.reserve(seen.size() + 3);
  for (const char* marker : kMarkers) {
    v.ids_.emplace(marker, static_cast<int>(v.tokens_.size()));
    v.tokens_.emplace_back(marker);
  }
  for (const std::string& tok : seen) {
    v.ids_.emplace(tok, static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(tok);
  }
  return v;
}

int ToyVocab::id_of(const std::string& token) const {
  const auto it = ids_.find(token);
  if (it == ids_.end()) {
    throw DataError("token '" + token + "' not in vocabulary");
  }
  return it->second;
}

std::vector<int> ToyVocab::encode(std::string_view text) const {
  std::vector<int> out;
  const std::vector<std::string> toks = tokenize(text);
  out.reserve(toks.size() + 2);
  out.push_back(kBos);
  for (const std::string& tok : toks) {
    out.push_back(id_of(tok));
  }
  out.push_back(kEos);
  return out;
}

std::string ToyVocab::decode(std::span<const int> ids) const {
  std::string out;
  for (const int id : ids) {
    if (id == kBos || id == kEos || id == kPad) continue;
    if (!out.empty()) out.push_back(' ');
    out += token(id);
  }
  return out;
}

Eigen::MatrixXd& ToyModelParams::tensor(std::size_t i) {
  switch (i) {
    case 0: return token_embedding;
    case 1: return recurrence;
    case 2: return input_map;
    case 3: return image_cond;
    case 4: return output_map;
    case 5: return text_proj;
    case 6: return image_proj;
  }
  throw std::out_of_range("tensor index");
}

const Eigen::MatrixXd& ToyModelParams::tensor(std::size_t i) const {
  return const_cast<ToyModelParams*>(this)->tensor(i);
}

std::string_view ToyModelParams::tensor_name(std::size_t i) {
  constexpr std::string_view names[kTensorCount] = {
      "token_embedding", "recurrence", "input_map",  "image_cond",
      "output_map",      "text_proj",  "image_proj",
  };
  return names[i];
}

ToyModelShapes ToyModelParams::shapes() const {
  ToyModelShapes s;
  s.vocab = static_cast<int>(token_embedding.rows());
  s.d_e = static_cast<int>(token_embedding.cols());
  s.d_h = static_cast<int>(recurrence.rows());
  s.d_r = static_cast<int>(text_proj.rows());
  s.d_img = static_cast<int>(image_proj.cols());
  return s;
}

ToyModelParams ToyModelParams::zeros(const ToyModelShapes& s) {
  ToyModelParams p;
  p.token_embedding = Eigen::MatrixXd::Zero(s.vocab, s.d_e);
  p.recurrence = Eigen::MatrixXd::Zero(s.d_h, s.d_h);
  p.input_map = Eigen::MatrixXd::Zero(s.d_h, s.d_e);
  p.image_cond = Eigen::MatrixXd::Zero(s.d_h, s.d_r);
  p.output_map = Eigen::MatrixXd::Zero(s.vocab, s.d_h);
  p.text_proj = Eigen::MatrixXd::Zero(s.d_r, s.d_h);
  p.image_proj = Eigen::MatrixXd::Zero(s.d_r, s.d_img);
  return p;
}

ToyModelParams ToyModelParams::random(const ToyModelShapes& s,
                                      std::uint64_t seed, double scale) {
  ToyModelParams p = zeros(s);
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    Eigen::MatrixXd& m = p.tensor(t);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = (2.0 * uniform01(rng) - 1.0) * scale;
      }
    }
  }
  return p;
}

void ToyModelParams::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write checkpoint " + file.string());
  }
  out.write(kMagic, 8);
  const ToyModelShapes s = shapes();
  write_u32_le(out, static_cast<std::uint32_t>(s.vocab));
  write_u32_le(out, static_cast<std::uint32_t>(s.d_e));
  write_u32_le(out, static_cast<std::uint32_t>(s.d_h));
  write_u32_le(out, static_cast<std::uint32_t>(s.d_r));
  write_u32_le(out, static_cast<std::uint32_t>(s.d_img));
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    const Eigen::MatrixXd& m = tensor(t);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        write_f64_le(out, m(r, c));
      }
    }
  }
}

ToyModelParams ToyModelParams::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw DataError("cannot open checkpoint " + file.string());
  }
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError("magic mismatch in " + file.string() +
                    " (expected DIVETOY1)");
  }
  ToyModelShapes s;
  s.vocab = static_cast<int>(read_u32_le(in, "vocab"));
  s.d_e = static_cast<int>(read_u32_le(in, "d_e"));
  s.d_h = static_cast<int>(read_u32_le(in, "d_h"));
  s.d_r = static_cast<int>(read_u32_le(in, "d_r"));
  s.d_img = static_cast<int>(read_u32_le(in, "d_img"));
  ToyModelParams p = zeros(s);
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    Eigen::MatrixXd& m = p.tensor(t);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double v = read_f64_le(in);
        if (!std::isfinite(v)) {
          throw DataError("non-finite value in checkpoint tensor " +
                          std::string(tensor_name(t)));
        }
        m(r, c) = v;
      }
    }
  }
  return p;
}

Eigen::VectorXd encode_image(std::span<const Eigen::VectorXd> feature_rows,
                             const ToyModelParams& params) {
  if (feature_rows.empty()) {
    throw DataError("encode_image needs at least one feature row");
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(params.image_proj.rows());
  for (const Eigen::VectorXd& row : feature_rows) {
    if (row.size() != params.image_proj.cols()) {
      throw DataError("feature row width " + std::to_string(row.size()) +
                      " does not match image projection width " +
                      std::to_string(params.image_proj.cols()));
    }
    sum += params.image_proj * row;
  }
  return sum / static_cast<double>(feature_rows.size());
}

DecodeTrace decode_text(std::span<const int> tokens,
                        const Eigen::VectorXd& v_h,
                        const ToyModelParams& params) {
  const ToyModelShapes s = params.shapes();
  const std::size_t steps = validate_sequence(tokens, s.vocab, false);
  if (v_h.size() != s.d_r) {
    throw DataError("conditioning vector width mismatch");
  }
  DecodeTrace trace;
  trace.hidden.resize(s.d_h, static_cast<Eigen::Index>(steps));
  trace.logits.resize(s.vocab, static_cast<Eigen::Index>(steps));
  trace.active.resize(steps);
  const Eigen::VectorXd cond = params.image_cond * v_h;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(s.d_h);
  for (std::size_t j = 0; j < steps; ++j) {
    const Eigen::VectorXd z = params.recurrence * h +
                              params.input_map *
                                  params.token_embedding.row(tokens[j])
                                      .transpose() +
                              cond;
    h = z.array().tanh();
    trace.hidden.col(static_cast<Eigen::Index>(j)) = h;
    trace.logits.col(static_cast<Eigen::Index>(j)) = params.output_map * h;
    trace.active[j] = tokens[j + 1] != ToyVocab::kPad;
    if (trace.active[j]) ++trace.active_count;
  }
  return trace;
}

Eigen::VectorXd text_representation(const DecodeTrace& trace,
                                    const ToyModelParams& params) {
  if (trace.active_count == 0) {
    throw DataError("text_representation needs at least one non-PAD step");
  }
  Eigen::VectorXd h_bar = Eigen::VectorXd::Zero(trace.hidden.rows());
  for (std::size_t j = 0; j < trace.active.size(); ++j) {
    if (trace.active[j]) {
      h_bar += trace.hidden.col(static_cast<Eigen::Index>(j));
    }
  }
  h_bar /= static_cast<double>(trace.active_count);
  return params.text_proj * h_bar;
}

double agreement(const Eigen::VectorXd& image_repr,
                 const Eigen::VectorXd& text_repr) {
  const double na = vector_norm_checked(image_repr, "image representation");
  const double nb = vector_norm_checked(text_repr, "text representation");
  return std::exp(image_repr.dot(text_repr) / (na * nb));
}

double lm_loss(std::span<const int> tokens, const Eigen::VectorXd& v_h,
               const ToyModelParams& params) {
  validate_sequence(tokens, params.shapes().vocab, true);
  const DecodeTrace trace = decode_text(tokens, v_h, params);
  double loss = 0.0;
  for (std::size_t j = 0; j < trace.active.size(); ++j) {
    if (!trace.active[j]) continue;
    const auto col = trace.logits.col(static_cast<Eigen::Index>(j));
    const double m = col.maxCoeff();
    const double lse = m + std::log((col.array() - m).exp().sum());
    loss += lse - col(tokens[j + 1]);
  }
  return loss;
}

double contrastive_loss(const ContrastiveBatchItem& item,
                        const ToyModelParams& params) {
  if (!item.crl_enabled) {
    throw DataError("contrastive_loss on an item flagged LM-only");
  }
  if (item.images.size() < 2) {
    throw DataError("contrastive_loss needs |H| >= 2");
  }
  validate_sequence(item.tokens, params.shapes().vocab, true);
  const Eigen::VectorXd v_p =
      params.image_proj * item.images[item.positive_index];
  const DecodeTrace trace = decode_text(item.tokens, v_p, params);
  const Eigen::VectorXd t_s = text_representation(trace, params);
  std::vector<double> cosines;
  cosines.reserve(item.images.size());
  for (const Eigen::VectorXd& row : item.images) {
    cosines.push_back(cosine_with_grad(params.image_proj * row, t_s).value);
  }
  return contrastive_forward(cosines, item.positive_index).loss;
}

LossBreakdown total_loss(const ContrastiveBatchItem& item,
                         const ToyModelParams& params, double lambda) {
  if (lambda < 0.0) {
    throw DataError("lambda must be non-negative");
  }
  LossBreakdown out;
  out.lambda = lambda;
  const Eigen::VectorXd v_p =
      params.image_proj * item.images.at(item.positive_index);
  out.l_org = lm_loss(item.tokens, v_p, params);
  if (item.crl_enabled) {
    out.l_crl = contrastive_loss(item, params);
  }
  out.l_total = out.l_org + lambda * out.l_crl;
  return out;
}

Gradients backward(const ContrastiveBatchItem& item,
                   const ToyModelParams& params, double lambda,
                   LossBreakdown* loss_out) {
  if (lambda < 0.0) {
    throw DataError("lambda must be non-negative");
  }
  const ToyModelShapes s = params.shapes();
  if (item.images.empty() || item.positive_index >= item.images.size()) {
    throw DataError("batch item has no valid positive image");
  }
  const bool crl = item.crl_enabled;
  if (crl && item.images.size() < 2) {
    throw DataError("contrastive item needs |H| >= 2");
  }
  validate_sequence(item.tokens, s.vocab, true);

  // Shared forward pass: the decoder states feed both the LM loss and T_s.
  std::vector<Eigen::VectorXd> image_reprs;
  image_reprs.reserve(item.images.size());
  for (const Eigen::VectorXd& row : item.images) {
    image_reprs.push_back(params.image_proj * row);
  }
  const Eigen::VectorXd& v_p = image_reprs[item.positive_index];
  const DecodeTrace trace = decode_text(item.tokens, v_p, params);
  const std::size_t steps = trace.active.size();

  Gradients g = ToyModelParams::zeros(s);
  LossBreakdown loss;
  loss.lambda = lambda;

  // LM term: d logits = softmax - onehot(target) on active steps.
  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(s.d_h, trace.hidden.cols());
  for (std::size_t j = 0; j < steps; ++j) {
    if (!trace.active[j]) continue;
    const auto jj = static_cast<Eigen::Index>(j);
    const auto col = trace.logits.col(jj);
    const double m = col.maxCoeff();
    const double lse = m + std::log((col.array() - m).exp().sum());
    loss.l_org += lse - col(item.tokens[j + 1]);
    Eigen::VectorXd dlogits = (col.array() - lse).exp();
    dlogits(item.tokens[j + 1]) -= 1.0;
    g.output_map += dlogits * trace.hidden.col(jj).transpose();
    dh.col(jj) += params.output_map.transpose() * dlogits;
  }

  // Contrastive term through T_s and every member's V_h.
  Eigen::VectorXd h_bar = Eigen::VectorXd::Zero(s.d_h);
  for (std::size_t j = 0; j < steps; ++j) {
    if (trace.active[j]) h_bar += trace.hidden.col(static_cast<Eigen::Index>(j));
  }
  h_bar /= static_cast<double>(trace.active_count);
  const Eigen::VectorXd t_s = params.text_proj * h_bar;

  Eigen::VectorXd d_t = Eigen::VectorXd::Zero(s.d_r);
  std::vector<Eigen::VectorXd> d_image_repr(
      item.images.size(), Eigen::VectorXd::Zero(s.d_r));
  if (crl) {
    std::vector<CosineGrad> cos_grads;
    std::vector<double> cosines;
    cos_grads.reserve(item.images.size());
    for (const Eigen::VectorXd& repr : image_reprs) {
      cos_grads.push_back(cosine_with_grad(repr, t_s));
      cosines.push_back(cos_grads.back().value);
    }
    const ContrastiveForward fwd =
        contrastive_forward(cosines, item.positive_index);
    loss.l_crl = fwd.loss;
    if (lambda != 0.0) {
      for (std::size_t i = 0; i < item.images.size(); ++i) {
        const double d_cos =
            lambda *
            (fwd.softmax[i] - (i == item.positive_index ? 1.0 : 0.0));
        d_image_repr[i] += d_cos * cos_grads[i].d_left;
        d_t += d_cos * cos_grads[i].d_right;
      }
    }
  }

  g.text_proj += d_t * h_bar.transpose();
  const Eigen::VectorXd dh_from_t = params.text_proj.transpose() * d_t /
                                    static_cast<double>(trace.active_count);
  for (std::size_t j = 0; j < steps; ++j) {
    if (trace.active[j]) dh.col(static_cast<Eigen::Index>(j)) += dh_from_t;
  }

  // Backpropagation through the recurrence.
  Eigen::VectorXd carry = Eigen::VectorXd::Zero(s.d_h);
  Eigen::VectorXd d_v_p = Eigen::VectorXd::Zero(s.d_r);
  for (std::size_t j = steps; j-- > 0;) {
    const auto jj = static_cast<Eigen::Index>(j);
    const Eigen::VectorXd h_j = trace.hidden.col(jj);
    const Eigen::VectorXd delta =
        ((dh.col(jj) + carry).array() * (1.0 - h_j.array().square()))
            .matrix();
    if (j > 0) {
      g.recurrence += delta * trace.hidden.col(jj - 1).transpose();
    }
    g.input_map +=
        delta * params.token_embedding.row(item.tokens[j]);
    g.token_embedding.row(item.tokens[j]) +=
        (params.input_map.transpose() * delta).transpose();
    g.image_cond += delta * v_p.transpose();
    d_v_p += params.image_cond.transpose() * delta;
    carry = params.recurrence.transpose() * delta;
  }
  d_image_repr[item.positive_index] += d_v_p;

  for (std::size_t i = 0; i < item.images.size(); ++i) {
    g.image_proj += d_image_repr[i] * item.images[i].transpose();
  }

  loss.l_total = loss.l_org + lambda * loss.l_crl;
  if (!std::isfinite(loss.l_total)) {
    throw NumericError("non-finite loss in backward pass");
  }
  if (loss_out != nullptr) {
    *loss_out = loss;
  }
  return g;
}

}  // namespace dive
