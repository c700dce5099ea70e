#include "dive/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "dive/error.hpp"
#include "dive/text.hpp"

namespace dive {
namespace {

constexpr char kNgramSep = '\x1f';

std::string ngram_key(std::span<const std::string> tokens, std::size_t start,
                      std::size_t n) {
  std::string key;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) key.push_back(kNgramSep);
    key += tokens[start + i];
  }
  return key;
}

std::unordered_map<std::string, std::int64_t> ngram_counts(
    std::span<const std::string> tokens, std::size_t n) {
  std::unordered_map<std::string, std::int64_t> counts;
  if (tokens.size() >= n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      ++counts[ngram_key(tokens, i, n)];
    }
  }
  return counts;
}

}  // namespace

GeneratedInference make_inference(std::string image_id, Relation relation,
                                  std::string text,
                                  std::optional<ParseTree> parse) {
  GeneratedInference inf;
  inf.image_id = std::move(image_id);
  inf.relation = relation;
  inf.text = std::move(text);
  inf.normalized = normalize_text(inf.text);
  inf.tokens = tokenize(inf.normalized);
  if (inf.tokens.empty()) {
    throw DataError("inference text '" + inf.text +
                    "' is empty after normalization");
  }
  if (parse) {
    if (parse->leaves() != inf.tokens) {
      throw DataError("parse leaves do not match the normalized tokens of '" +
                      inf.text + "'");
    }
    inf.parse = std::move(parse);
  }
  return inf;
}

GeneratedCorpus load_corpus_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open corpus file " + path.string());
  }
  GeneratedCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      std::optional<ParseTree> parse;
      if (j.contains("parse") && !j["parse"].is_null()) {
        parse = parse_bracketed(j["parse"].get<std::string>());
      }
      corpus.push_back(make_inference(
          j.at("image_id").get<std::string>(),
          relation_from_string(j.at("relation").get<std::string>()),
          j.at("text").get<std::string>(), std::move(parse)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return corpus;
}

void ReferenceTable::add(const std::string& image_id, Relation relation,
                         std::span<const std::string> texts) {
  const auto key = std::make_pair(image_id, static_cast<int>(relation));
  if (table_.contains(key)) {
    throw DataError("duplicate references for image '" + image_id +
                    "' relation " + std::string(to_string(relation)));
  }
  if (texts.empty()) {
    throw DataError("empty reference list for image '" + image_id + "'");
  }
  std::vector<Reference> refs;
  refs.reserve(texts.size());
  for (const std::string& t : texts) {
    Reference r;
    r.text = t;
    r.tokens = tokenize(normalize_text(t));
    if (r.tokens.empty()) {
      throw DataError("reference '" + t + "' is empty after normalization");
    }
    refs.push_back(std::move(r));
  }
  table_.emplace(key, std::move(refs));
}

const std::vector<Reference>& ReferenceTable::for_inference(
    const GeneratedInference& inf) const {
  const auto it =
      table_.find(std::make_pair(inf.image_id, static_cast<int>(inf.relation)));
  if (it == table_.end()) {
    throw DataError("missing references for image '" + inf.image_id +
                    "' relation " + std::string(to_string(inf.relation)));
  }
  return it->second;
}

ReferenceTable ReferenceTable::load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open references file " + path.string());
  }
  ReferenceTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      const auto texts = j.at("references").get<std::vector<std::string>>();
      table.add(j.at("image_id").get<std::string>(),
                relation_from_string(j.at("relation").get<std::string>()),
                texts);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

UnigramModel UnigramModel::from_token_sequences(
    std::span<const std::vector<std::string>> sequences) {
  UnigramModel m;
  for (const auto& seq : sequences) {
    for (const std::string& tok : seq) {
      ++m.counts_[tok];
      ++m.total_;
    }
  }
  return m;
}

UnigramModel UnigramModel::from_graph(const VisualCommonsenseGraph& g) {
  UnigramModel m;
  for (const InferenceEdge& e : g.edges()) {
    const std::string& text =
        g.descriptions()[static_cast<std::size_t>(e.description)]
            .normalized_text;
    for (const std::string& tok : tokenize(text)) {
      ++m.counts_[tok];
      ++m.total_;
    }
  }
  return m;
}

std::int64_t UnigramModel::count(const std::string& token) const {
  const auto it = counts_.find(token);
  return it == counts_.end() ? 0 : it->second;
}

double mean_length(const GeneratedCorpus& corpus) {
  if (corpus.empty()) {
    throw DataError("mean_length of empty corpus");
  }
  double sum = 0.0;
  for (const GeneratedInference& inf : corpus) {
    sum += static_cast<double>(inf.tokens.size());
  }
  return sum / static_cast<double>(corpus.size());
}

std::size_t dist_n(const GeneratedCorpus& corpus, std::size_t n) {
  std::unordered_set<std::string> grams;
  for (const GeneratedInference& inf : corpus) {
    if (inf.tokens.size() < n) continue;
    for (std::size_t i = 0; i + n <= inf.tokens.size(); ++i) {
      grams.insert(ngram_key(inf.tokens, i, n));
    }
  }
  return grams.size();
}

double word_entropy(const GeneratedInference& inf, const UnigramModel& m) {
  if (m.total() <= 0) {
    throw DataError("word_entropy needs a non-empty unigram model");
  }
  const double denom =
      static_cast<double>(m.total()) + static_cast<double>(m.vocab_size()) + 1.0;
  double sum = 0.0;
  for (const std::string& tok : inf.tokens) {
    const double p = (static_cast<double>(m.count(tok)) + 1.0) / denom;
    sum += -std::log2(p);
  }
  return sum / static_cast<double>(inf.tokens.size());
}

double unique_pct(const GeneratedCorpus& corpus) {
  if (corpus.empty()) {
    throw DataError("unique_pct of empty corpus");
  }
  std::unordered_map<std::string, std::size_t> multiplicity;
  for (const GeneratedInference& inf : corpus) {
    ++multiplicity[inf.normalized];
  }
  std::size_t unique = 0;
  for (const GeneratedInference& inf : corpus) {
    if (multiplicity.at(inf.normalized) == 1) ++unique;
  }
  return 100.0 * static_cast<double>(unique) /
         static_cast<double>(corpus.size());
}

double novel_pct(const GeneratedCorpus& corpus,
                 const std::unordered_set<std::string>& train_descriptions) {
  if (corpus.empty()) {
    throw DataError("novel_pct of empty corpus");
  }
  std::size_t novel = 0;
  for (const GeneratedInference& inf : corpus) {
    if (!train_descriptions.contains(inf.normalized)) ++novel;
  }
  return 100.0 * static_cast<double>(novel) /
         static_cast<double>(corpus.size());
}

double recall_at_k(const EmbeddingMatrix& text_embs,
                   const EmbeddingMatrix& image_embs,
                   std::span<const std::size_t> truth, std::size_t k) {
  if (text_embs.dim() != image_embs.dim()) {
    throw DataError("text/image embedding dimension mismatch");
  }
  if (k < 1 || k > image_embs.rows()) {
    throw DataError("k = " + std::to_string(k) +
                    " outside the candidate pool of " +
                    std::to_string(image_embs.rows()) + " images");
  }
  if (truth.size() != text_embs.rows()) {
    throw DataError("truth pairing size does not match text rows");
  }
  if (text_embs.rows() == 0) {
    throw DataError("no texts to evaluate");
  }
  std::size_t hits = 0;
  for (std::size_t t = 0; t < text_embs.rows(); ++t) {
    const std::size_t true_image = truth[t];
    if (true_image >= image_embs.rows()) {
      throw DataError("truth pairing points outside the image pool");
    }
    const double sim_true =
        cosine_similarity(text_embs.row(t), image_embs.row(true_image));
    std::size_t rank = 0;  // images ahead of the true one
    for (std::size_t i = 0; i < image_embs.rows(); ++i) {
      if (i == true_image) continue;
      const double sim = cosine_similarity(text_embs.row(t), image_embs.row(i));
      if (sim > sim_true || (sim == sim_true && i < true_image)) {
        ++rank;
      }
    }
    if (rank < k) ++hits;
  }
  return 100.0 * static_cast<double>(hits) /
         static_cast<double>(text_embs.rows());
}

double bleu_n(const GeneratedCorpus& corpus, const ReferenceTable& refs,
              std::size_t max_order) {
  if (corpus.empty()) {
    throw DataError("bleu of empty corpus");
  }
  std::vector<std::int64_t> total(max_order, 0);
  std::vector<std::int64_t> correct(max_order, 0);
  std::int64_t hyp_len = 0;
  std::int64_t ref_len = 0;

  for (const GeneratedInference& inf : corpus) {
    const std::vector<Reference>& rs = refs.for_inference(inf);
    hyp_len += static_cast<std::int64_t>(inf.tokens.size());

    // Closest reference length; ties go to the shorter reference.
    std::int64_t best = static_cast<std::int64_t>(rs[0].tokens.size());
    for (const Reference& r : rs) {
      const auto len = static_cast<std::int64_t>(r.tokens.size());
      const auto diff = [&](std::int64_t l) {
        return std::abs(l - static_cast<std::int64_t>(inf.tokens.size()));
      };
      if (diff(len) < diff(best) || (diff(len) == diff(best) && len < best)) {
        best = len;
      }
    }
    ref_len += best;

    for (std::size_t g = 1; g <= max_order; ++g) {
      const auto hyp_counts = ngram_counts(inf.tokens, g);
      if (inf.tokens.size() >= g) {
        total[g - 1] +=
            static_cast<std::int64_t>(inf.tokens.size() - g + 1);
      }
      for (const auto& [gram, count] : hyp_counts) {
        std::int64_t clip = 0;
        for (const Reference& r : rs) {
          const auto rc = ngram_counts(r.tokens, g);
          const auto it = rc.find(gram);
          if (it != rc.end()) clip = std::max(clip, it->second);
        }
        correct[g - 1] += std::min(count, clip);
      }
    }
  }

  double log_precision = 0.0;
  for (std::size_t g = 0; g < max_order; ++g) {
    if (total[g] == 0 || correct[g] == 0) {
      return 0.0;
    }
    log_precision += std::log(static_cast<double>(correct[g]) /
                              static_cast<double>(total[g]));
  }
  double bp = 1.0;
  if (hyp_len < ref_len) {
    bp = std::exp(1.0 - static_cast<double>(ref_len) /
                            static_cast<double>(hyp_len));
  }
  return bp * std::exp(log_precision / static_cast<double>(max_order));
}

double cider(const GeneratedCorpus& corpus, const ReferenceTable& refs) {
  if (corpus.empty()) {
    throw DataError("cider of empty corpus");
  }
  constexpr std::size_t kOrders = 4;
  const double n_docs = static_cast<double>(refs.size());

  // Document frequency per n-gram: number of reference sets containing it.
  std::array<std::unordered_map<std::string, std::int64_t>, kOrders> df;
  refs.for_each([&](const std::vector<Reference>& rs) {
    std::array<std::unordered_set<std::string>, kOrders> seen;
    for (const Reference& r : rs) {
      for (std::size_t n = 1; n <= kOrders; ++n) {
        for (const auto& [gram, c] : ngram_counts(r.tokens, n)) {
          seen[n - 1].insert(gram);
        }
      }
    }
    for (std::size_t n = 0; n < kOrders; ++n) {
      for (const std::string& gram : seen[n]) ++df[n][gram];
    }
  });

  // (N+1) in the numerator keeps idf strictly positive, so an identical
  // hypothesis/reference pair scores cosine 1 even in one-document corpora.
  const auto idf = [&](std::size_t order, const std::string& gram) {
    const auto it = df[order].find(gram);
    const double d =
        it == df[order].end() ? 1.0 : std::max<double>(1.0, double(it->second));
    return std::log((n_docs + 1.0) / d);
  };

  // tf-idf vector for one sentence at one order.
  const auto vectorize = [&](std::span<const std::string> tokens,
                             std::size_t order) {
    std::unordered_map<std::string, double> vec;
    for (const auto& [gram, count] : ngram_counts(tokens, order + 1)) {
      vec[gram] = static_cast<double>(count) * idf(order, gram);
    }
    return vec;
  };

  const auto cosine = [](const std::unordered_map<std::string, double>& a,
                         const std::unordered_map<std::string, double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [gram, v] : a) {
      na += v * v;
      const auto it = b.find(gram);
      if (it != b.end()) dot += v * it->second;
    }
    for (const auto& [gram, v] : b) nb += v * v;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
  };

  double corpus_sum = 0.0;
  for (const GeneratedInference& inf : corpus) {
    const std::vector<Reference>& rs = refs.for_inference(inf);
    double item = 0.0;
    for (std::size_t order = 0; order < kOrders; ++order) {
      const auto hyp_vec = vectorize(inf.tokens, order);
      double order_sum = 0.0;
      for (const Reference& r : rs) {
        order_sum += cosine(hyp_vec, vectorize(r.tokens, order));
      }
      item += order_sum / static_cast<double>(rs.size());
    }
    corpus_sum += 10.0 * item / static_cast<double>(kOrders);
  }
  return corpus_sum / static_cast<double>(corpus.size());
}

EntropyHistogram entropy_histogram(const GeneratedCorpus& corpus,
                                   const UnigramModel& m, double bin_width) {
  if (corpus.empty()) {
    throw DataError("entropy_histogram of empty corpus");
  }
  if (!(bin_width > 0.0)) {
    throw DataError("bin width must be positive");
  }
  std::map<double, std::size_t> counts;
  for (const GeneratedInference& inf : corpus) {
    const double h = word_entropy(inf, m);
    const double center = bin_width * std::floor(h / bin_width + 0.5);
    ++counts[center];
  }
  EntropyHistogram hist;
  hist.bin_width = bin_width;
  for (const auto& [center, count] : counts) {
    hist.bins.emplace_back(center, static_cast<double>(count) /
                                       static_cast<double>(corpus.size()));
  }
  return hist;
}

std::string_view to_string(YngveSource s) {
  switch (s) {
    case YngveSource::kParsed:
      return "parsed";
    case YngveSource::kFallback:
      return "fallback";
    case YngveSource::kMixed:
      return "mixed";
  }
  return "?";
}

MetricsReport evaluate_corpus(
    const GeneratedCorpus& corpus, const ReferenceTable& refs,
    const UnigramModel& unigram,
    const std::unordered_set<std::string>& train_descriptions) {
  if (corpus.empty()) {
    throw DataError("evaluate_corpus of empty corpus");
  }
  MetricsReport report;
  report.length_mean = mean_length(corpus);

  double yngve_sum = 0.0;
  std::size_t parsed = 0;
  for (const GeneratedInference& inf : corpus) {
    if (inf.parse) {
      yngve_sum += yngve_sentence(*inf.parse);
      ++parsed;
    } else {
      yngve_sum += yngve_sentence(right_branching_fallback(inf.tokens));
    }
  }
  report.yngve_mean = yngve_sum / static_cast<double>(corpus.size());
  report.yngve_source = parsed == corpus.size()   ? YngveSource::kParsed
                        : parsed == 0             ? YngveSource::kFallback
                                                  : YngveSource::kMixed;

  report.dist2 = dist_n(corpus, 2);
  report.dist3 = dist_n(corpus, 3);

  double entropy_sum = 0.0;
  for (const GeneratedInference& inf : corpus) {
    entropy_sum += word_entropy(inf, unigram);
  }
  report.entropy_mean = entropy_sum / static_cast<double>(corpus.size());

  report.unique_pct = unique_pct(corpus);
  report.novel_pct = novel_pct(corpus, train_descriptions);
  report.bleu2 = bleu_n(corpus, refs, 2);
  report.cider = cider(corpus, refs);
  return report;
}

RetrievalReport retrieval_eval(const EmbeddingMatrix& text_embs,
                               const EmbeddingMatrix& image_embs,
                               std::span<const std::size_t> truth,
                               std::span<const std::size_t> ks) {
  RetrievalReport report;
  for (const std::size_t k : ks) {
    report.recall_at.emplace_back(
        k, recall_at_k(text_embs, image_embs, truth, k));
  }
  std::sort(report.recall_at.begin(), report.recall_at.end());
  return report;
}

std::string to_json_string(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["length_mean"] = report.length_mean;
  j["yngve_mean"] = report.yngve_mean;
  j["yngve_source"] = std::string(to_string(report.yngve_source));
  j["dist2"] = report.dist2;
  j["dist3"] = report.dist3;
  j["entropy_mean"] = report.entropy_mean;
  j["unique_pct"] = report.unique_pct;
  j["novel_pct"] = report.novel_pct;
  j["bleu2"] = report.bleu2;
  j["cider"] = report.cider;
  return j.dump(2);
}

std::string to_json_string(const EntropyHistogram& hist) {
  nlohmann::ordered_json j;
  j["bin_width"] = hist.bin_width;
  auto bins = nlohmann::ordered_json::array();
  for (const auto& [center, ratio] : hist.bins) {
    bins.push_back({{"bin_center", center}, {"ratio", ratio}});
  }
  j["bins"] = std::move(bins);
  return j.dump(2);
}

std::string to_json_string(const RetrievalReport& report) {
  nlohmann::ordered_json j;
  auto recalls = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.recall_at) {
    recalls[std::to_string(k)] = v;
  }
  j["recall_at"] = std::move(recalls);
  return j.dump(2);
}

}  // namespace dive
